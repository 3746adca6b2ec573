// Copyright 2026 The OODForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OODFORGE_DATA_H_
#define OODFORGE_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oodforge/autodiff.h"

namespace oodforge {

// Malformed or unreadable dataset input.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledSet {
  Tensor x;  // n x d, features in [-1, 1]
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  friend bool operator==(const LabeledSet&, const LabeledSet&) = default;
};

// In-distribution train/test splits with labels, plus unlabeled
// out-of-distribution sets. `ood_train` exists only when something consumes
// real OOD data for training.
struct Dataset {
  LabeledSet in_train;
  LabeledSet in_test;
  std::optional<Tensor> ood_train;
  Tensor ood_test;
  std::size_t dim = 0;
  std::size_t classes = 0;

  // Checks widths, label range, feature range, and that no ood_test row also
  // appears in ood_train. Throws DataError.
  void Validate() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// K Gaussian blobs centered on a circle of `radius`, n_per_class points each,
// clipped to [-1, 1]^2. Rows are grouped by class.
LabeledSet GenBlobs(std::size_t classes, std::size_t n_per_class,
                    double radius, double sigma, std::uint64_t seed);

// Uniform angle, radius uniform in [r_min, r_max], clipped to [-1, 1]^2.
Tensor GenOodRing(std::size_t n, double r_min, double r_max,
                  std::uint64_t seed);

// Uniform over [-1, 1]^2.
Tensor GenOodUniform(std::size_t n, std::uint64_t seed);

struct BlobRingOptions {
  std::size_t classes = 4;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 500;
  double radius = 0.6;
  double sigma = 0.08;
  std::size_t ood_train_size = 2000;
  std::size_t ood_test_size = 2000;
  double ring_r_min = 0.85;
  double ring_r_max = 1.0;
  bool with_ood_train = true;
  std::uint64_t seed = 7;
};

// Blob in-distribution splits and ring OOD splits, each from its own stream.
Dataset MakeBlobRingDataset(const BlobRingOptions& options);

struct IdxImages {
  LabeledSet samples;
  std::size_t height = 0;
  std::size_t width = 0;
};

// IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian).
// Pixels are average-pooled over factor x factor blocks and mapped from
// [0, 255] to [-1, 1]. `limit` > 0 keeps only the first `limit` images.
IdxImages LoadIdxImages(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path,
                        std::size_t downsample_factor, std::size_t limit = 0);

// Directory layout: in_train.csv, in_test.csv, ood_test.csv and, when
// present, ood_train.csv. Each row is `x0,...,x{d-1},label` with label -1 for
// OOD rows. Values use shortest round-trip formatting.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset LoadDataset(const std::filesystem::path& dir);

// Canonical text of one split as written by SaveDataset.
std::string SerializeSplit(const Tensor& x, const std::vector<int>* labels);

}  // namespace oodforge

#endif  // OODFORGE_DATA_H_

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

#ifndef OODFORGE_RUN_H_
#define OODFORGE_RUN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oodforge/config.h"
#include "oodforge/data.h"
#include "oodforge/detection.h"
#include "oodforge/models.h"

namespace oodforge {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
};

// Bad invocation or missing input; maps to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset plus, for image data, the pixel grid of one sample.
struct LoadedData {
  Dataset dataset;
  std::optional<std::pair<std::size_t, std::size_t>> image_shape;  // h, w
};

// Builds the dataset described by the `data.*` keys. Relative paths resolve
// against `base_dir`.
LoadedData ResolveData(Config& config, const std::filesystem::path& base_dir);

// SHA-256 (hex) of the dataset's canonical CSV serialization.
std::string DatasetFingerprint(const Dataset& dataset);

struct EvalMetrics {
  double auroc = 0.0;
  double tnr_at_95tpr = 0.0;
  double detection_accuracy = 0.0;
  double in_accuracy = 0.0;
  double ood_mean_score = 0.0;
};

// Max-softmax detector on in_test vs. ood_test.
EvalMetrics EvaluateClassifier(const ModelSpec& spec, const ModelParams& params,
                               const Dataset& dataset, ScoreSet* scores = nullptr);

struct RunOutcome {
  std::string mode;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::size_t final_step = 0;
  EvalMetrics final_metrics;
};

// `train`: resolves the config, trains, and writes the artifact directory
// (manifest.json, config.resolved, dataset/, history.csv, metrics.csv,
// snapshots/step_<N>/, samples/ in GAN modes). `out_dir` must be absent or
// empty.
RunOutcome RunTrain(Config config, const std::filesystem::path& config_dir,
                    const std::filesystem::path& out_dir);

// `eval`: scores one snapshot on a saved dataset and writes metrics.csv,
// scores.csv and roc.csv into `out_dir`.
EvalMetrics RunEval(const std::filesystem::path& snapshot_dir,
                    const std::filesystem::path& data_dir,
                    const std::filesystem::path& out_dir);

struct CompareRow {
  std::string run;
  std::string mode;
  std::string seed;  // empty on median rows
  double auroc = 0.0;
  double tnr_at_95tpr = 0.0;
  double detection_accuracy = 0.0;
  double in_accuracy = 0.0;
};

// `compare`: one row per run from its final snapshot, then a median row per
// mode that has several runs. All runs must share a dataset fingerprint.
std::vector<CompareRow> RunCompare(
    const std::vector<std::filesystem::path>& run_dirs,
    const std::filesystem::path& out_file);

// Binary PGM (P5, maxval 255) of `images` (n x h*w, values in [-1, 1]) tiled
// `per_row` to a row.
void WritePgmGrid(const std::filesystem::path& path, const Tensor& images,
                  std::size_t height, std::size_t width, std::size_t per_row = 8);

// Entry point of the `oodforge` tool; returns the process exit code.
int RunMain(int argc, char** argv);

}  // namespace oodforge

#endif  // OODFORGE_RUN_H_

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

#include "oodforge/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "oodforge/float_format.h"
#include "oodforge/random.h"

namespace oodforge {

namespace fs = std::filesystem;

void Dataset::Validate() const {
  auto check_x = [this](const Tensor& x, const char* split) {
    if (x.rank() != 2 || x.cols() != dim) {
      throw DataError(std::string(split) + ": expected width " +
                      std::to_string(dim) + ", got " +
                      ShapeToString(x.shape()));
    }
    for (double v : x.data()) {
      if (!(v >= -1.0 && v <= 1.0)) {
        throw DataError(std::string(split) + ": feature " +
                        std::to_string(v) + " outside [-1, 1]");
      }
    }
  };
  auto check_labeled = [&](const LabeledSet& s, const char* split) {
    check_x(s.x, split);
    if (s.y.size() != s.x.rows()) {
      throw DataError(std::string(split) + ": label count mismatch");
    }
    for (int label : s.y) {
      if (label < 0 || static_cast<std::size_t>(label) >= classes) {
        throw DataError(std::string(split) + ": label " +
                        std::to_string(label) + " outside [0, " +
                        std::to_string(classes) + ")");
      }
    }
  };
  if (dim == 0) throw DataError("dataset: zero feature dimension");
  if (classes < 2) throw DataError("dataset: need at least 2 classes");
  check_labeled(in_train, "in_train");
  check_labeled(in_test, "in_test");
  check_x(ood_test, "ood_test");
  if (ood_train) {
    check_x(*ood_train, "ood_train");
    std::set<std::vector<double>> train_rows;
    const std::size_t d = dim;
    for (std::size_t r = 0; r < ood_train->rows(); ++r) {
      const auto row = ood_train->data().subspan(r * d, d);
      train_rows.emplace(row.begin(), row.end());
    }
    for (std::size_t r = 0; r < ood_test.rows(); ++r) {
      const auto row = ood_test.data().subspan(r * d, d);
      if (train_rows.contains(std::vector<double>(row.begin(), row.end()))) {
        throw DataError("dataset: ood_test row " + std::to_string(r) +
                        " also appears in ood_train");
      }
    }
  }
}

LabeledSet GenBlobs(std::size_t classes, std::size_t n_per_class,
                    double radius, double sigma, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("GenBlobs: need K >= 2");
  if (n_per_class == 0) throw std::invalid_argument("GenBlobs: n must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("GenBlobs: sigma < 0");
  RandomStream stream(seed, "blobs");
  LabeledSet out;
  std::vector<double> x;
  x.reserve(classes * n_per_class * 2);
  for (std::size_t k = 0; k < classes; ++k) {
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(k) / classes;
    const double cx = radius * std::cos(angle);
    const double cy = radius * std::sin(angle);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double nx = stream.Normal();
      const double ny = stream.Normal();
      x.push_back(std::clamp(cx + sigma * nx, -1.0, 1.0));
      x.push_back(std::clamp(cy + sigma * ny, -1.0, 1.0));
      out.y.push_back(static_cast<int>(k));
    }
  }
  out.x = Tensor::Matrix(classes * n_per_class, 2, std::move(x));
  return out;
}

Tensor GenOodRing(std::size_t n, double r_min, double r_max,
                  std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("GenOodRing: n must be >= 1");
  if (!(r_min > 0.0 && r_min < r_max && r_max <= std::numbers::sqrt2)) {
    throw std::invalid_argument("GenOodRing: need 0 < r_min < r_max <= sqrt(2)");
  }
  RandomStream stream(seed, "ring");
  std::vector<double> x;
  x.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = stream.Uniform(0.0, 2.0 * std::numbers::pi);
    const double r = stream.Uniform(r_min, r_max);
    x.push_back(std::clamp(r * std::cos(angle), -1.0, 1.0));
    x.push_back(std::clamp(r * std::sin(angle), -1.0, 1.0));
  }
  return Tensor::Matrix(n, 2, std::move(x));
}

Tensor GenOodUniform(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("GenOodUniform: n must be >= 1");
  RandomStream stream(seed, "uniform");
  std::vector<double> x(2 * n);
  for (double& v : x) v = stream.Uniform(-1.0, 1.0);
  return Tensor::Matrix(n, 2, std::move(x));
}

Dataset MakeBlobRingDataset(const BlobRingOptions& o) {
  Dataset d;
  d.dim = 2;
  d.classes = o.classes;
  d.in_train = GenBlobs(o.classes, o.train_per_class, o.radius, o.sigma,
                        DeriveSeed(o.seed, "in_train"));
  d.in_test = GenBlobs(o.classes, o.test_per_class, o.radius, o.sigma,
                       DeriveSeed(o.seed, "in_test"));
  d.ood_test = GenOodRing(o.ood_test_size, o.ring_r_min, o.ring_r_max,
                          DeriveSeed(o.seed, "ood_test"));
  if (o.with_ood_train) {
    d.ood_train = GenOodRing(o.ood_train_size, o.ring_r_min, o.ring_r_max,
                             DeriveSeed(o.seed, "ood_train"));
  }
  d.Validate();
  return d;
}

namespace {

std::vector<unsigned char> ReadFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t BigEndian32(const std::vector<unsigned char>& bytes,
                          std::size_t offset, const fs::path& path) {
  if (offset + 4 > bytes.size()) {
    throw DataError(path.string() + ": truncated IDX header");
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) |
         std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

IdxImages LoadIdxImages(const fs::path& images_path,
                        const fs::path& labels_path,
                        std::size_t downsample_factor, std::size_t limit) {
  if (downsample_factor == 0) {
    throw std::invalid_argument("LoadIdxImages: downsample factor must be >= 1");
  }
  const auto images = ReadFileBytes(images_path);
  const auto labels = ReadFileBytes(labels_path);

  const std::uint32_t image_magic = BigEndian32(images, 0, images_path);
  if (image_magic != kIdxImagesMagic) {
    std::ostringstream msg;
    msg << images_path.string() << ": bad IDX image magic 0x" << std::hex
        << image_magic << " (expected 0x803)";
    throw DataError(msg.str());
  }
  const std::uint32_t label_magic = BigEndian32(labels, 0, labels_path);
  if (label_magic != kIdxLabelsMagic) {
    std::ostringstream msg;
    msg << labels_path.string() << ": bad IDX label magic 0x" << std::hex
        << label_magic << " (expected 0x801)";
    throw DataError(msg.str());
  }

  const std::size_t count = BigEndian32(images, 4, images_path);
  const std::size_t rows = BigEndian32(images, 8, images_path);
  const std::size_t cols = BigEndian32(images, 12, images_path);
  const std::size_t label_count = BigEndian32(labels, 4, labels_path);
  if (count != label_count) {
    throw DataError("IDX count mismatch: " + std::to_string(count) +
                    " images vs " + std::to_string(label_count) + " labels");
  }
  if (images.size() < 16 + count * rows * cols) {
    throw DataError(images_path.string() + ": truncated image data");
  }
  if (labels.size() < 8 + count) {
    throw DataError(labels_path.string() + ": truncated label data");
  }
  if (count == 0 || rows == 0 || cols == 0) {
    throw DataError(images_path.string() + ": empty image set");
  }
  const std::size_t f = downsample_factor;
  if (rows % f != 0 || cols % f != 0) {
    throw DataError("IDX images " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " not divisible by factor " +
                    std::to_string(f));
  }

  const std::size_t n = limit > 0 ? std::min(limit, count) : count;
  const std::size_t h = rows / f;
  const std::size_t w = cols / f;
  std::vector<double> x;
  x.reserve(n * h * w);
  IdxImages out;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* img = images.data() + 16 + i * rows * cols;
    for (std::size_t by = 0; by < h; ++by) {
      for (std::size_t bx = 0; bx < w; ++bx) {
        double total = 0.0;
        for (std::size_t dy = 0; dy < f; ++dy) {
          for (std::size_t dx = 0; dx < f; ++dx) {
            total += img[(by * f + dy) * cols + bx * f + dx];
          }
        }
        const double mean = total / static_cast<double>(f * f);
        x.push_back(mean / 127.5 - 1.0);
      }
    }
    out.samples.y.push_back(labels[8 + i]);
  }
  out.samples.x = Tensor::Matrix(n, h * w, std::move(x));
  out.height = h;
  out.width = w;
  return out;
}

std::string SerializeSplit(const Tensor& x, const std::vector<int>* labels) {
  std::string text;
  const std::size_t d = x.cols();
  for (std::size_t c = 0; c < d; ++c) text += "x" + std::to_string(c) + ",";
  text += "label\n";
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      text += FormatDouble(x(r, c));
      text += ',';
    }
    text += labels != nullptr ? std::to_string((*labels)[r]) : "-1";
    text += '\n';
  }
  return text;
}

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

struct ParsedSplit {
  Tensor x;
  std::vector<int> y;
};

ParsedSplit ReadSplit(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      const auto header = SplitCsv(line);
      if (header.size() < 2 || Trim(header.back()) != "label") {
        throw DataError(path.string() + ":1: malformed header");
      }
      width = header.size() - 1;
      continue;
    }
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsv(line);
    if (fields.size() != width + 1) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(width + 1) +
                      " fields, got " + std::to_string(fields.size()));
    }
    try {
      for (std::size_t c = 0; c < width; ++c) {
        values.push_back(ParseDouble(fields[c]));
      }
      labels.push_back(static_cast<int>(ParseInt(fields[width])));
    } catch (const std::invalid_argument& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  if (labels.empty()) throw DataError(path.string() + ": no rows");
  return {Tensor::Matrix(labels.size(), width, std::move(values)),
          std::move(labels)};
}

Tensor Unlabeled(ParsedSplit split, const fs::path& path) {
  for (int label : split.y) {
    if (label != -1) {
      throw DataError(path.string() + ": OOD rows must carry label -1");
    }
  }
  return std::move(split.x);
}

}  // namespace

void SaveDataset(const Dataset& dataset, const fs::path& dir) {
  dataset.Validate();
  fs::create_directories(dir);
  WriteText(dir / "in_train.csv",
            SerializeSplit(dataset.in_train.x, &dataset.in_train.y));
  WriteText(dir / "in_test.csv",
            SerializeSplit(dataset.in_test.x, &dataset.in_test.y));
  WriteText(dir / "ood_test.csv", SerializeSplit(dataset.ood_test, nullptr));
  if (dataset.ood_train) {
    WriteText(dir / "ood_train.csv",
              SerializeSplit(*dataset.ood_train, nullptr));
  }
}

Dataset LoadDataset(const fs::path& dir) {
  Dataset d;
  ParsedSplit train = ReadSplit(dir / "in_train.csv");
  ParsedSplit test = ReadSplit(dir / "in_test.csv");
  d.in_train = {std::move(train.x), std::move(train.y)};
  d.in_test = {std::move(test.x), std::move(test.y)};
  d.ood_test = Unlabeled(ReadSplit(dir / "ood_test.csv"), dir / "ood_test.csv");
  if (fs::exists(dir / "ood_train.csv")) {
    d.ood_train =
        Unlabeled(ReadSplit(dir / "ood_train.csv"), dir / "ood_train.csv");
  }
  d.dim = d.in_train.x.cols();
  int max_label = -1;
  for (int label : d.in_train.y) max_label = std::max(max_label, label);
  for (int label : d.in_test.y) max_label = std::max(max_label, label);
  d.classes = static_cast<std::size_t>(max_label + 1);
  d.Validate();
  return d;
}

}  // namespace oodforge

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

#include "oodforge/run.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oodforge/float_format.h"
#include "oodforge/training.h"

namespace oodforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::size_t kDefaultSampleCount = 256;

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void PrepareOutDir(const fs::path& dir) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw UsageError(dir.string() + " exists and is not a directory");
    }
    if (!fs::is_empty(dir)) {
      throw UsageError("refusing to write into non-empty directory " +
                       dir.string());
    }
  }
  fs::create_directories(dir);
}

LabeledSet LoadIdxSplit(Config& config, const fs::path& base,
                        const std::string& split, std::size_t factor,
                        std::size_t limit, std::pair<std::size_t, std::size_t>& shape) {
  const std::string images = config.GetString("data." + split + "_images", "");
  const std::string labels = config.GetString("data." + split + "_labels", "");
  if (images.empty() || labels.empty()) {
    throw ConfigError("data." + split + "_images",
                      "idx source needs data." + split + "_images and data." +
                          split + "_labels");
  }
  IdxImages loaded =
      LoadIdxImages(Resolve(base, images), Resolve(base, labels), factor, limit);
  shape = {loaded.height, loaded.width};
  return std::move(loaded.samples);
}

std::string Hex(const unsigned char* bytes, std::size_t n) {
  std::ostringstream out;
  for (std::size_t i = 0; i < n; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(bytes[i]);
  }
  return out.str();
}

std::string SpecText(const ModelSpec& spec) {
  std::string hidden;
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
    if (i > 0) hidden += ",";
    hidden += std::to_string(spec.hidden[i]);
  }
  std::ostringstream out;
  out << "classifier.input_dim = " << spec.input_dim << "\n"
      << "classifier.hidden = " << hidden << "\n"
      << "classifier.output_dim = " << spec.output_dim << "\n"
      << "classifier.activation = " << ActivationName(spec.activation) << "\n";
  return out.str();
}

ModelSpec ReadSpec(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("missing " + path.string());
  Config config = Config::Load(path);
  ModelSpec spec;
  spec.input_dim = config.GetSize("classifier.input_dim", 0);
  spec.hidden = config.GetSizeList("classifier.hidden", {});
  spec.output_dim = config.GetSize("classifier.output_dim", 0);
  spec.activation = ParseActivation(config.GetString("classifier.activation", "relu"));
  spec.head = Head::kLogits;
  config.RequireAllConsumed();
  try {
    spec.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return spec;
}

std::string MetricsHeader() {
  return "snapshot,auroc,tnr_at_95tpr,detection_accuracy,in_accuracy\n";
}

std::string MetricsRow(const std::string& name, const EvalMetrics& m) {
  return name + "," + FormatDouble(m.auroc) + "," +
         FormatDouble(m.tnr_at_95tpr) + "," +
         FormatDouble(m.detection_accuracy) + "," +
         FormatDouble(m.in_accuracy) + "\n";
}

std::string ScoresCsv(const ScoreSet& scores) {
  std::string text = "split,score\n";
  for (double s : scores.in) text += "in," + FormatDouble(s) + "\n";
  for (double s : scores.out) text += "out," + FormatDouble(s) + "\n";
  return text;
}

std::string RocCsv(const RocCurve& curve) {
  std::string text = "threshold,tpr,tnr\n";
  for (const RocPoint& p : curve) {
    text += FormatDouble(p.threshold) + "," + FormatDouble(p.tpr) + "," +
            FormatDouble(p.tnr) + "\n";
  }
  return text;
}

std::string SamplesCsv(const Tensor& samples) {
  std::string text;
  for (std::size_t c = 0; c < samples.cols(); ++c) {
    if (c > 0) text += ",";
    text += "x" + std::to_string(c);
  }
  text += "\n";
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    for (std::size_t c = 0; c < samples.cols(); ++c) {
      if (c > 0) text += ",";
      text += FormatDouble(samples(r, c));
    }
    text += "\n";
  }
  return text;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

LoadedData ResolveData(Config& config, const fs::path& base_dir) {
  LoadedData out;
  const std::string source = config.GetString("data.source", "blobs");
  if (source == "blobs") {
    BlobRingOptions o;
    o.seed = config.GetSize("data.seed", o.seed);
    o.classes = config.GetSize("data.classes", o.classes);
    o.train_per_class = config.GetSize("data.train_per_class", o.train_per_class);
    o.test_per_class = config.GetSize("data.test_per_class", o.test_per_class);
    o.radius = config.GetDouble("data.radius", o.radius);
    o.sigma = config.GetDouble("data.sigma", o.sigma);
    o.ood_train_size = config.GetSize("data.ood_train_size", o.ood_train_size);
    o.ood_test_size = config.GetSize("data.ood_test_size", o.ood_test_size);
    o.ring_r_min = config.GetDouble("data.ring_r_min", o.ring_r_min);
    o.ring_r_max = config.GetDouble("data.ring_r_max", o.ring_r_max);
    const std::string ood_kind = config.GetString("data.ood_test_kind", "ring");
    try {
      out.dataset = MakeBlobRingDataset(o);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("", std::string("data: ") + e.what());
    }
    if (ood_kind == "uniform") {
      out.dataset.ood_test =
          GenOodUniform(o.ood_test_size, DeriveSeed(o.seed, "ood_test"));
      out.dataset.Validate();
    } else if (ood_kind != "ring") {
      throw ConfigError("data.ood_test_kind",
                        "data.ood_test_kind: expected ring or uniform, got '" +
                            ood_kind + "'");
    }
  } else if (source == "dir") {
    const std::string path = config.GetString("data.path", "");
    if (path.empty()) throw ConfigError("data.path", "data.source = dir needs data.path");
    const fs::path dir = Resolve(base_dir, path);
    if (!fs::is_directory(dir)) throw UsageError("dataset directory not found: " + dir.string());
    out.dataset = LoadDataset(dir);
  } else if (source == "idx") {
    const std::size_t factor = config.GetSize("data.downsample", 4);
    const std::size_t train_limit = config.GetSize("data.train_limit", 0);
    const std::size_t test_limit = config.GetSize("data.test_limit", 0);
    std::pair<std::size_t, std::size_t> shape;
    Dataset& d = out.dataset;
    d.in_train = LoadIdxSplit(config, base_dir, "in_train", factor, train_limit, shape);
    d.in_test = LoadIdxSplit(config, base_dir, "in_test", factor, test_limit, shape);
    d.ood_test = LoadIdxSplit(config, base_dir, "ood_test", factor, test_limit, shape).x;
    if (config.Has("data.ood_train_images") || config.Has("data.ood_train_labels")) {
      d.ood_train =
          LoadIdxSplit(config, base_dir, "ood_train", factor, train_limit, shape).x;
    }
    d.dim = d.in_train.x.cols();
    int max_label = 0;
    for (int y : d.in_train.y) max_label = std::max(max_label, y);
    for (int y : d.in_test.y) max_label = std::max(max_label, y);
    d.classes = static_cast<std::size_t>(max_label) + 1;
    d.Validate();
    out.image_shape = shape;
  } else {
    throw ConfigError("data.source",
                      "data.source: expected blobs, dir or idx, got '" + source + "'");
  }
  return out;
}

std::string DatasetFingerprint(const Dataset& dataset) {
  std::string text = "in_train\n" + SerializeSplit(dataset.in_train.x, &dataset.in_train.y);
  text += "in_test\n" + SerializeSplit(dataset.in_test.x, &dataset.in_test.y);
  if (dataset.ood_train) {
    text += "ood_train\n" + SerializeSplit(*dataset.ood_train, nullptr);
  }
  text += "ood_test\n" + SerializeSplit(dataset.ood_test, nullptr);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  return Hex(digest, length);
}

EvalMetrics EvaluateClassifier(const ModelSpec& spec, const ModelParams& params,
                               const Dataset& dataset, ScoreSet* scores_out) {
  const Tensor in_logits = Predict(spec, params, dataset.in_test.x);
  const Tensor out_logits = Predict(spec, params, dataset.ood_test);
  ScoreSet scores{MaxSoftmaxScores(in_logits), MaxSoftmaxScores(out_logits)};
  EvalMetrics m;
  m.auroc = Auroc(scores);
  m.tnr_at_95tpr = TnrAtTpr(scores, 0.95);
  m.detection_accuracy = DetectionAccuracy(scores);
  m.in_accuracy = ClassificationAccuracy(in_logits, dataset.in_test.y);
  double total = 0.0;
  for (double s : scores.out) total += s;
  m.ood_mean_score = total / static_cast<double>(scores.out.size());
  if (scores_out != nullptr) *scores_out = std::move(scores);
  return m;
}

void WritePgmGrid(const fs::path& path, const Tensor& images,
                  std::size_t height, std::size_t width, std::size_t per_row) {
  if (images.cols() != height * width) {
    throw ShapeError("WritePgmGrid: image width does not match " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t n = images.rows();
  const std::size_t tiles_x = std::min(per_row, n);
  const std::size_t tiles_y = (n + per_row - 1) / per_row;
  const std::size_t w = tiles_x * width;
  const std::size_t h = tiles_y * height;
  std::string pixels(w * h, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ox = (i % per_row) * width;
    const std::size_t oy = (i / per_row) * height;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double v = std::clamp(images(i, y * width + x), -1.0, 1.0);
        const long level = std::lround((v + 1.0) * 127.5);
        pixels[(oy + y) * w + ox + x] = static_cast<char>(level);
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
}

RunOutcome RunTrain(Config config, const fs::path& config_dir,
                    const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  LoadedData data = ResolveData(config, config_dir);
  const Dataset& dataset = data.dataset;
  const TrainConfig train =
      ResolveTrainConfig(config, dataset.dim, dataset.classes);
  const std::size_t sample_count =
      config.GetSize("samples.count", kDefaultSampleCount);
  if (sample_count == 0) throw ConfigError("samples.count", "samples.count must be >= 1");
  config.RequireAllConsumed();
  if (train.mode == TrainMode::kOracle && !dataset.ood_train) {
    throw ConfigError("train.mode", "oracle mode needs an ood_train split");
  }

  PrepareOutDir(out_dir);
  std::vector<std::string> artifacts;
  auto emit = [&](const fs::path& rel, const std::string& text) {
    fs::create_directories((out_dir / rel).parent_path());
    WriteFile(out_dir / rel, text);
    artifacts.push_back(rel.generic_string());
  };

  emit("config.resolved", config.ResolvedText());
  SaveDataset(dataset, out_dir / "dataset");
  for (const char* split : {"in_train.csv", "in_test.csv", "ood_train.csv", "ood_test.csv"}) {
    if (fs::exists(out_dir / "dataset" / split)) {
      artifacts.push_back((fs::path("dataset") / split).generic_string());
    }
  }

  const TrainResult result = Train(train, dataset);

  std::ostringstream history;
  WriteHistoryCsv(history, result.history);
  emit("history.csv", history.str());

  std::string metrics_csv = MetricsHeader();
  EvalMetrics final_metrics;
  for (const Snapshot& snap : result.snapshots) {
    const std::string name = "step_" + std::to_string(snap.step);
    const fs::path dir = fs::path("snapshots") / name;
    std::ostringstream params;
    WriteParamsCsvHeader(params);
    WriteParamsCsv(params, "classifier", snap.classifier);
    if (snap.generator) WriteParamsCsv(params, "generator", *snap.generator);
    if (snap.discriminator) {
      WriteParamsCsv(params, "discriminator", *snap.discriminator);
    }
    emit(dir / "params.csv", params.str());
    emit(dir / "classifier.cfg", SpecText(train.classifier));

    ScoreSet scores;
    final_metrics = EvaluateClassifier(train.classifier, snap.classifier, dataset, &scores);
    emit(dir / "scores.csv", ScoresCsv(scores));
    emit(dir / "roc.csv", RocCsv(ComputeRoc(scores)));
    metrics_csv += MetricsRow(name, final_metrics);

    if (snap.generator) {
      RandomStream stream(train.seed, "samples");
      const Tensor z = SampleLatent(sample_count, train.latent_dim, stream);
      const Tensor samples = Predict(train.generator, *snap.generator, z);
      if (data.image_shape) {
        const fs::path rel = fs::path("samples") / (name + ".pgm");
        fs::create_directories(out_dir / "samples");
        WritePgmGrid(out_dir / rel, samples, data.image_shape->first,
                     data.image_shape->second);
        artifacts.push_back(rel.generic_string());
      } else {
        emit(fs::path("samples") / (name + ".csv"), SamplesCsv(samples));
      }
    }
  }
  emit("metrics.csv", metrics_csv);

  RunOutcome outcome;
  outcome.mode = std::string(TrainModeName(train.mode));
  outcome.seed = train.seed;
  outcome.fingerprint = DatasetFingerprint(dataset);
  outcome.final_step = result.state.step;
  outcome.final_metrics = final_metrics;

  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  json manifest;
  manifest["config"] = config.resolved();
  manifest["mode"] = outcome.mode;
  manifest["seed"] = outcome.seed;
  manifest["dataset_fingerprint"] = outcome.fingerprint;
  manifest["artifacts"] = artifacts;
  manifest["duration_seconds"] = seconds;
  WriteFile(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

EvalMetrics RunEval(const fs::path& snapshot_dir, const fs::path& data_dir,
                    const fs::path& out_dir) {
  const fs::path params_path = snapshot_dir / "params.csv";
  if (!fs::exists(params_path)) throw UsageError("missing " + params_path.string());
  if (!fs::is_directory(data_dir)) {
    throw UsageError("dataset directory not found: " + data_dir.string());
  }
  for (const char* split : {"in_train.csv", "in_test.csv", "ood_test.csv"}) {
    if (!fs::exists(data_dir / split)) {
      throw UsageError("missing " + (data_dir / split).string());
    }
  }
  const ModelSpec spec = ReadSpec(snapshot_dir / "classifier.cfg");
  std::ifstream in(params_path);
  const ModelParams params = ReadParamsCsv(in, "classifier", spec);
  const Dataset dataset = LoadDataset(data_dir);
  if (spec.input_dim != dataset.dim) {
    throw UsageError("snapshot expects " + std::to_string(spec.input_dim) +
                     " features, dataset has " + std::to_string(dataset.dim));
  }

  ScoreSet scores;
  const EvalMetrics m = EvaluateClassifier(spec, params, dataset, &scores);
  PrepareOutDir(out_dir);
  const std::string name = fs::absolute(snapshot_dir).lexically_normal().filename().string();
  WriteFile(out_dir / "metrics.csv", MetricsHeader() + MetricsRow(name, m));
  WriteFile(out_dir / "scores.csv", ScoresCsv(scores));
  WriteFile(out_dir / "roc.csv", RocCsv(ComputeRoc(scores)));
  return m;
}

std::vector<CompareRow> RunCompare(const std::vector<fs::path>& run_dirs,
                                   const fs::path& out_file) {
  if (run_dirs.size() < 2) throw UsageError("compare needs at least two runs");
  if (fs::exists(out_file)) {
    throw UsageError("refusing to overwrite " + out_file.string());
  }
  std::vector<CompareRow> rows;
  std::string fingerprint;
  for (const fs::path& dir : run_dirs) {
    const json manifest = json::parse(ReadFile(dir / "manifest.json"));
    const std::string fp = manifest.at("dataset_fingerprint").get<std::string>();
    if (fingerprint.empty()) {
      fingerprint = fp;
    } else if (fp != fingerprint) {
      throw UsageError("dataset fingerprint of " + dir.string() +
                       " differs from " + run_dirs.front().string());
    }
    std::istringstream metrics(ReadFile(dir / "metrics.csv"));
    std::string line;
    std::string last;
    std::getline(metrics, line);
    while (std::getline(metrics, line)) {
      if (!Trim(line).empty()) last = line;
    }
    const auto fields = SplitCsv(last);
    if (fields.size() != 5) {
      throw UsageError(dir.string() + "/metrics.csv has no snapshot rows");
    }
    CompareRow row;
    row.run = fs::absolute(dir).lexically_normal().filename().string();
    if (row.run.empty()) row.run = dir.parent_path().filename().string();
    row.mode = manifest.at("mode").get<std::string>();
    row.seed = std::to_string(manifest.at("seed").get<std::uint64_t>());
    row.auroc = ParseDouble(fields[1]);
    row.tnr_at_95tpr = ParseDouble(fields[2]);
    row.detection_accuracy = ParseDouble(fields[3]);
    row.in_accuracy = ParseDouble(fields[4]);
    rows.push_back(row);
  }

  std::map<std::string, std::vector<const CompareRow*>> by_mode;
  for (const CompareRow& r : rows) by_mode[r.mode].push_back(&r);
  std::vector<CompareRow> medians;
  for (const auto& [mode, group] : by_mode) {
    if (group.size() < 2) continue;
    auto column = [&group](double CompareRow::*field) {
      std::vector<double> v;
      for (const CompareRow* r : group) v.push_back(r->*field);
      return Median(std::move(v));
    };
    CompareRow m;
    m.run = "median";
    m.mode = mode;
    m.auroc = column(&CompareRow::auroc);
    m.tnr_at_95tpr = column(&CompareRow::tnr_at_95tpr);
    m.detection_accuracy = column(&CompareRow::detection_accuracy);
    m.in_accuracy = column(&CompareRow::in_accuracy);
    medians.push_back(m);
  }
  rows.insert(rows.end(), medians.begin(), medians.end());

  std::string text = "run,mode,seed,auroc,tnr_at_95tpr,detection_accuracy,in_accuracy\n";
  for (const CompareRow& r : rows) {
    text += r.run + "," + r.mode + "," + r.seed + "," + FormatDouble(r.auroc) +
            "," + FormatDouble(r.tnr_at_95tpr) + "," +
            FormatDouble(r.detection_accuracy) + "," +
            FormatDouble(r.in_accuracy) + "\n";
  }
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  WriteFile(out_file, text);
  return rows;
}

int RunMain(int argc, char** argv) {
  CLI::App app{"Out-of-distribution robust classifier lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "Train one configuration");
  train_cmd->add_option("--config", config_path, "Config file")->required();
  train_cmd->add_option("--out", train_out, "Artifact directory")->required();

  std::string snapshot_dir;
  std::string data_dir;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a snapshot");
  eval_cmd->add_option("--snapshot", snapshot_dir, "Snapshot directory")->required();
  eval_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();

  std::vector<std::string> run_dirs;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Summarize completed runs");
  compare_cmd->add_option("runs", run_dirs, "Run directories")->required();
  compare_cmd->add_option("--out", compare_out, "Summary CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (const char* threads = std::getenv("OODFORGE_THREADS");
        threads != nullptr && std::string(threads) != "1") {
      throw UsageError("OODFORGE_THREADS must be 1 or unset");
    }
    if (*train_cmd) {
      const fs::path path(config_path);
      if (!fs::exists(path)) throw UsageError("config not found: " + config_path);
      const RunOutcome r = RunTrain(Config::Load(path), path.parent_path(), train_out);
      std::cout << "mode=" << r.mode << " seed=" << r.seed
                << " steps=" << r.final_step
                << " auroc=" << FormatDouble(r.final_metrics.auroc)
                << " in_accuracy=" << FormatDouble(r.final_metrics.in_accuracy)
                << "\n";
    } else if (*eval_cmd) {
      const EvalMetrics m = RunEval(snapshot_dir, data_dir, eval_out);
      std::cout << "auroc=" << FormatDouble(m.auroc)
                << " tnr_at_95tpr=" << FormatDouble(m.tnr_at_95tpr)
                << " detection_accuracy=" << FormatDouble(m.detection_accuracy)
                << "\n";
    } else if (*compare_cmd) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      RunCompare(dirs, compare_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error";
    if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
    std::cerr << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical failure at step " << e.step() << " (" << e.term()
              << "): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace oodforge

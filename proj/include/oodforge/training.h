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

#ifndef OODFORGE_TRAINING_H_
#define OODFORGE_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodforge/autodiff.h"
#include "oodforge/config.h"
#include "oodforge/data.h"
#include "oodforge/models.h"
#include "oodforge/objectives.h"
#include "oodforge/random.h"

namespace oodforge {

// baseline: cross-entropy only. oracle: confidence loss with real OOD
// training data. boundary_gan / conf_gan: three-player games.
enum class TrainMode { kBaseline, kBoundaryGan, kConfGan, kOracle };

std::string_view TrainModeName(TrainMode mode);
TrainMode ParseTrainMode(std::string_view name);
bool UsesGenerator(TrainMode mode);

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam accumulators; `step` counts completed updates.
struct Moments {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::size_t step = 0;
};

Moments ZeroMoments(const ModelParams& params);

// sgd:  p -= lr * g
// adam: m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2;
//       p -= lr * m_hat / (sqrt(v_hat) + eps)  with bias-corrected m_hat, v_hat.
// Throws NumericalError on a non-finite gradient.
void OptimizerUpdate(const OptimizerConfig& optimizer, ModelParams& params,
                     std::span<const Tensor> grads, Moments& moments,
                     double lr);

struct TrainConfig {
  TrainMode mode = TrainMode::kConfGan;
  double beta = 1.0;
  std::size_t steps = 3000;
  std::size_t batch_size = 64;
  std::size_t latent_dim = 8;
  double lr_classifier = 1e-3;
  double lr_generator = 1e-3;
  double lr_discriminator = 1e-3;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  std::size_t snapshot_every = 500;
  // Boundary generator maximizes log D(G(z)) instead of minimizing
  // log(1 - D(G(z))).
  bool non_saturating = false;
  ModelSpec classifier;
  ModelSpec generator;
  ModelSpec discriminator;

  // Default nets for `input_dim` features and `classes` labels.
  static TrainConfig Defaults(std::size_t input_dim, std::size_t classes);
  // Throws ConfigError.
  void Validate() const;
};

// Reads every training key (`train.*`, `classifier.*`, `generator.*`,
// `discriminator.*`) from `config`, filling defaults. Baseline mode forces
// beta to 0.
TrainConfig ResolveTrainConfig(Config& config, std::size_t input_dim,
                               std::size_t classes);

// Epoch-wise shuffled minibatch indices. A new permutation is drawn whenever
// fewer than a full batch remain; the tail of the old epoch is dropped.
class BatchSchedule {
 public:
  BatchSchedule() = default;
  BatchSchedule(std::size_t count, std::size_t batch_size);
  std::vector<std::size_t> Next(RandomStream& stream);

 private:
  std::size_t batch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct Player {
  ModelSpec spec;
  ModelParams params;
  Moments moments;
};

struct TrainState {
  std::size_t step = 0;
  Player classifier;
  std::optional<Player> generator;
  std::optional<Player> discriminator;
  RandomStream shuffle_stream{0, "shuffle"};
  RandomStream latent_stream{0, "latent"};
  RandomStream ood_stream{0, "ood"};
  BatchSchedule in_batches;
  BatchSchedule ood_batches;
};

// A non-finite value appeared during a step.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(std::size_t step, std::string term, const std::string& detail);
  std::size_t step() const { return step_; }
  const std::string& term() const { return term_; }

 private:
  std::size_t step_;
  std::string term_;
};

// Parameters from the init stream, zero moments, fresh named streams.
TrainState InitTrainState(const TrainConfig& config, const Dataset& dataset);

// One step on the given batches. `aux` is the latent batch in GAN modes, the
// real OOD batch in oracle mode, and ignored in baseline mode. GAN modes run,
// in order: discriminator update, generator update, then a classifier update
// whose fake logits come from the updated generator with its output held
// constant.
LossBreakdown TrainStep(const TrainConfig& config, TrainState& state,
                        const Tensor& in_x, std::span<const int> in_y,
                        const Tensor& aux);

struct HistoryRow {
  std::size_t step = 0;
  TrainMode mode = TrainMode::kBaseline;
  LossBreakdown loss;
};

struct Snapshot {
  std::size_t step = 0;
  ModelParams classifier;
  std::optional<ModelParams> generator;
  std::optional<ModelParams> discriminator;
};

struct TrainResult {
  TrainState state;
  std::vector<HistoryRow> history;
  std::vector<Snapshot> snapshots;
};

// Runs `config.steps` steps. Snapshots are taken every `snapshot_every`
// steps and at the final step. Throws ConfigError for oracle mode without an
// OOD training split, DivergenceError on a non-finite loss.
TrainResult Train(const TrainConfig& config, const Dataset& dataset);

// `step,mode,ce,kl_forward,kl_reverse,gan_d,gan_g,beta`
void WriteHistoryCsv(std::ostream& out, std::span<const HistoryRow> rows);

}  // namespace oodforge

#endif  // OODFORGE_TRAINING_H_

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

#include "oodforge/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "oodforge/float_format.h"

namespace oodforge {

std::string_view TrainModeName(TrainMode mode) {
  switch (mode) {
    case TrainMode::kBaseline:
      return "baseline";
    case TrainMode::kBoundaryGan:
      return "boundary_gan";
    case TrainMode::kConfGan:
      return "conf_gan";
    case TrainMode::kOracle:
      return "oracle";
  }
  return "?";
}

TrainMode ParseTrainMode(std::string_view name) {
  if (name == "baseline") return TrainMode::kBaseline;
  if (name == "boundary_gan") return TrainMode::kBoundaryGan;
  if (name == "conf_gan") return TrainMode::kConfGan;
  if (name == "oracle") return TrainMode::kOracle;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

bool UsesGenerator(TrainMode mode) {
  return mode == TrainMode::kBoundaryGan || mode == TrainMode::kConfGan;
}

Moments ZeroMoments(const ModelParams& params) {
  Moments m;
  for (const Parameter& p : params.entries) {
    m.first.push_back(Tensor::ZerosLike(p.value));
    m.second.push_back(Tensor::ZerosLike(p.value));
  }
  return m;
}

void OptimizerUpdate(const OptimizerConfig& optimizer, ModelParams& params,
                     std::span<const Tensor> grads, Moments& moments,
                     double lr) {
  if (grads.size() != params.entries.size() ||
      moments.first.size() != params.entries.size() ||
      moments.second.size() != params.entries.size()) {
    throw ShapeError("optimizer_update: parameter/gradient/moment count mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].SameShape(params.entries[i].value) ||
        !moments.first[i].SameShape(params.entries[i].value) ||
        !moments.second[i].SameShape(params.entries[i].value)) {
      throw ShapeError("optimizer_update: shape mismatch for layer " +
                       std::to_string(params.entries[i].layer) + " " +
                       params.entries[i].name);
    }
    if (!grads[i].AllFinite()) {
      throw NumericalError("optimizer_update: non-finite gradient");
    }
  }

  ++moments.step;
  if (optimizer.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
      Tensor& p = params.entries[i].value;
      for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * grads[i][j];
    }
    return;
  }

  const double b1 = optimizer.beta1;
  const double b2 = optimizer.beta2;
  const double t = static_cast<double>(moments.step);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Tensor& p = params.entries[i].value;
    Tensor& m = moments.first[i];
    Tensor& v = moments.second[i];
    const Tensor& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + optimizer.epsilon);
    }
  }
}

TrainConfig TrainConfig::Defaults(std::size_t input_dim, std::size_t classes) {
  TrainConfig c;
  c.classifier = ModelSpec::Classifier(input_dim, classes);
  c.generator = ModelSpec::Generator(c.latent_dim, input_dim);
  c.discriminator = ModelSpec::Discriminator(input_dim);
  return c;
}

void TrainConfig::Validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ConfigError("train.beta", "train.beta must be finite and >= 0");
  }
  if (mode == TrainMode::kBaseline && beta != 0.0) {
    throw ConfigError("train.beta", "baseline mode requires beta = 0");
  }
  if (batch_size == 0) {
    throw ConfigError("train.batch_size", "train.batch_size must be >= 1");
  }
  if (latent_dim == 0) {
    throw ConfigError("train.latent_dim", "train.latent_dim must be >= 1");
  }
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(key, std::string(key) + " must be positive");
    }
  };
  positive(lr_classifier, "train.lr_classifier");
  positive(lr_generator, "train.lr_generator");
  positive(lr_discriminator, "train.lr_discriminator");
  positive(optimizer.epsilon, "train.adam_eps");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) {
    throw ConfigError("train.adam_beta1", "train.adam_beta1 must be in [0, 1)");
  }
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("train.adam_beta2", "train.adam_beta2 must be in [0, 1)");
  }
  try {
    classifier.Validate();
    generator.Validate();
    discriminator.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
  if (classifier.output_dim < 2 || classifier.head != Head::kLogits) {
    throw ConfigError("", "classifier must emit K >= 2 logits");
  }
  if (discriminator.output_dim != 1 || discriminator.head != Head::kSigmoid ||
      discriminator.input_dim != classifier.input_dim) {
    throw ConfigError("", "discriminator must map the feature space to one sigmoid output");
  }
  if (generator.input_dim != latent_dim ||
      generator.output_dim != classifier.input_dim) {
    throw ConfigError("", "generator must map latent_dim to the feature space");
  }
}

TrainConfig ResolveTrainConfig(Config& config, std::size_t input_dim,
                               std::size_t classes) {
  TrainConfig c = TrainConfig::Defaults(input_dim, classes);
  const std::string mode = config.GetString("train.mode", "conf_gan");
  try {
    c.mode = ParseTrainMode(mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("train.mode", std::string("train.mode: ") + e.what());
  }
  c.seed = config.GetSize("train.seed", c.seed);
  c.beta = config.GetDouble("train.beta", c.beta);
  if (c.mode == TrainMode::kBaseline) {
    config.Set("train.beta", "0");
    c.beta = config.GetDouble("train.beta", 0.0);
  }
  c.steps = config.GetSize("train.steps", c.steps);
  c.batch_size = config.GetSize("train.batch_size", c.batch_size);
  c.latent_dim = config.GetSize("train.latent_dim", c.latent_dim);
  const std::string optimizer = config.GetString("train.optimizer", "adam");
  if (optimizer == "adam") {
    c.optimizer.kind = OptimizerKind::kAdam;
  } else if (optimizer == "sgd") {
    c.optimizer.kind = OptimizerKind::kSgd;
  } else {
    throw ConfigError("train.optimizer",
                      "train.optimizer: expected adam or sgd, got '" + optimizer + "'");
  }
  c.optimizer.beta1 = config.GetDouble("train.adam_beta1", c.optimizer.beta1);
  c.optimizer.beta2 = config.GetDouble("train.adam_beta2", c.optimizer.beta2);
  c.optimizer.epsilon = config.GetDouble("train.adam_eps", c.optimizer.epsilon);
  c.lr_classifier = config.GetDouble("train.lr_classifier", c.lr_classifier);
  c.lr_generator = config.GetDouble("train.lr_generator", c.lr_generator);
  c.lr_discriminator =
      config.GetDouble("train.lr_discriminator", c.lr_discriminator);
  c.snapshot_every = config.GetSize("train.snapshot_every", c.snapshot_every);
  c.non_saturating = config.GetBool("train.non_saturating", c.non_saturating);

  auto read_spec = [&config](const std::string& prefix, ModelSpec& spec) {
    spec.hidden = config.GetSizeList(prefix + ".hidden", spec.hidden);
    const std::string act = config.GetString(
        prefix + ".activation", std::string(ActivationName(spec.activation)));
    try {
      spec.activation = ParseActivation(act);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(prefix + ".activation",
                        prefix + ".activation: " + e.what());
    }
  };
  read_spec("classifier", c.classifier);
  read_spec("generator", c.generator);
  read_spec("discriminator", c.discriminator);
  c.generator.input_dim = c.latent_dim;

  c.Validate();
  return c;
}

BatchSchedule::BatchSchedule(std::size_t count, std::size_t batch_size)
    : batch_(std::min(count, batch_size)), order_(count), cursor_(count) {
  if (count == 0 || batch_size == 0) {
    throw std::invalid_argument("BatchSchedule: empty data or batch");
  }
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::vector<std::size_t> BatchSchedule::Next(RandomStream& stream) {
  if (cursor_ + batch_ > order_.size()) {
    std::shuffle(order_.begin(), order_.end(), stream.engine());
    cursor_ = 0;
  }
  std::vector<std::size_t> batch(order_.begin() + cursor_,
                                 order_.begin() + cursor_ + batch_);
  cursor_ += batch_;
  return batch;
}

DivergenceError::DivergenceError(std::size_t step, std::string term,
                                 const std::string& detail)
    : NumericalError("non-finite " + term + " at step " +
                     std::to_string(step) + ": " + detail),
      step_(step),
      term_(std::move(term)) {}

TrainState InitTrainState(const TrainConfig& config, const Dataset& dataset) {
  TrainState state;
  auto make_player = [&config](const ModelSpec& spec, std::string_view name) {
    Player p;
    p.spec = spec;
    p.params = InitParams(spec, DeriveSeed(config.seed, name));
    p.moments = ZeroMoments(p.params);
    return p;
  };
  state.classifier = make_player(config.classifier, "init.classifier");
  if (UsesGenerator(config.mode)) {
    state.generator = make_player(config.generator, "init.generator");
    state.discriminator =
        make_player(config.discriminator, "init.discriminator");
  }
  state.shuffle_stream = RandomStream(config.seed, "shuffle");
  state.latent_stream = RandomStream(config.seed, "latent");
  state.ood_stream = RandomStream(config.seed, "ood");
  state.in_batches = BatchSchedule(dataset.in_train.size(), config.batch_size);
  if (config.mode == TrainMode::kOracle && dataset.ood_train) {
    state.ood_batches =
        BatchSchedule(dataset.ood_train->rows(), config.batch_size);
  }
  return state;
}

namespace {

double ScalarOf(Var (*objective)(Var), const Tensor& logits) {
  Tape tape;
  return objective(tape.Constant(logits)).value().item();
}

// Runs `body`, converting numerical failures into a DivergenceError that
// names the step and term.
template <typename F>
auto Guarded(std::size_t step, const char* term, F&& body) {
  try {
    return body();
  } catch (const DivergenceError&) {
    throw;
  } catch (const NumericalError& e) {
    throw DivergenceError(step, term, e.what());
  }
}

double Finite(double value, std::size_t step, const char* term) {
  if (!std::isfinite(value)) throw DivergenceError(step, term, "loss value");
  return value;
}

}  // namespace

LossBreakdown TrainStep(const TrainConfig& config, TrainState& state,
                        const Tensor& in_x, std::span<const int> in_y,
                        const Tensor& aux) {
  const std::size_t step = state.step + 1;
  const double beta = config.mode == TrainMode::kBaseline ? 0.0 : config.beta;
  LossBreakdown loss;
  loss.beta = beta;
  std::optional<Tensor> ood_input;

  if (UsesGenerator(config.mode)) {
    if (!state.generator || !state.discriminator) {
      throw std::logic_error("TrainStep: GAN mode without generator state");
    }
    Player& gen = *state.generator;
    Player& disc = *state.discriminator;
    const GanMode gan_mode = config.mode == TrainMode::kBoundaryGan
                                 ? GanMode::kBoundaryGan
                                 : GanMode::kConfGan;

    // (1) Discriminator on real vs. current fakes.
    loss.gan_d = Guarded(step, "gan_d", [&] {
      Tape tape;
      std::vector<Var> g = BindParams(tape, gen.params, false);
      std::vector<Var> d = BindParams(tape, disc.params, true);
      Var fake = Forward(gen.spec, g, tape.Constant(aux));
      Var real_logit = ForwardPreHead(disc.spec, d, tape.Constant(in_x));
      Var fake_logit = ForwardPreHead(disc.spec, d, fake);
      Var objective = GanDiscriminatorLoss(real_logit, fake_logit);
      const double value = Finite(objective.value().item(), step, "gan_d");
      const std::vector<Tensor> grads = tape.Backward(objective);
      OptimizerUpdate(config.optimizer, disc.params, grads, disc.moments,
                      config.lr_discriminator);
      return value;
    });

    // (2) Generator against the updated discriminator and current classifier.
    loss.gan_g = Guarded(step, "gan_g", [&] {
      Tape tape;
      std::vector<Var> g = BindParams(tape, gen.params, true);
      std::vector<Var> d = BindParams(tape, disc.params, false);
      std::vector<Var> c = BindParams(tape, state.classifier.params, false);
      Var fake = Forward(gen.spec, g, tape.Constant(aux));
      Var d_logit = ForwardPreHead(disc.spec, d, fake);
      Var class_logits = Forward(state.classifier.spec, c, fake);
      Var objective = GeneratorObjective(gan_mode, d_logit, class_logits,
                                         beta, config.non_saturating);
      const double value = Finite(objective.value().item(), step, "gan_g");
      const std::vector<Tensor> grads = tape.Backward(objective);
      OptimizerUpdate(config.optimizer, gen.params, grads, gen.moments,
                      config.lr_generator);
      return value;
    });

    ood_input = Guarded(step, "generator_output",
                        [&] { return Predict(gen.spec, gen.params, aux); });
  } else if (config.mode == TrainMode::kOracle) {
    ood_input = aux;
  }

  // (3) Classifier; the fake/OOD inputs are constants.
  Guarded(step, "classifier", [&] {
    Player& cls = state.classifier;
    Tape tape;
    std::vector<Var> c = BindParams(tape, cls.params, true);
    Var logits_real = Forward(cls.spec, c, tape.Constant(in_x));
    std::optional<Var> logits_fake;
    if (ood_input) logits_fake = Forward(cls.spec, c, tape.Constant(*ood_input));
    Var objective = ClassifierObjective(logits_real, in_y, logits_fake, beta);
    loss.classifier_total = Finite(objective.value().item(), step, "classifier");

    {
      Tape scratch;
      loss.ce = CrossEntropy(scratch.Constant(logits_real.value()), in_y)
                    .value()
                    .item();
    }
    if (logits_fake) {
      loss.kl_forward = ScalarOf(&KlUniformForward, logits_fake->value());
      loss.kl_reverse = ScalarOf(&KlUniformReverse, logits_fake->value());
    }

    const std::vector<Tensor> grads = tape.Backward(objective);
    OptimizerUpdate(config.optimizer, cls.params, grads, cls.moments,
                    config.lr_classifier);
    return 0;
  });

  const std::string_view bad = loss.FirstNonFinite();
  if (!bad.empty()) throw DivergenceError(step, std::string(bad), "breakdown");
  state.step = step;
  return loss;
}

namespace {

Snapshot TakeSnapshot(const TrainState& state) {
  Snapshot s;
  s.step = state.step;
  s.classifier = state.classifier.params;
  if (state.generator) s.generator = state.generator->params;
  if (state.discriminator) s.discriminator = state.discriminator->params;
  return s;
}

std::vector<int> GatherLabels(const std::vector<int>& labels,
                              std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

}  // namespace

TrainResult Train(const TrainConfig& config, const Dataset& dataset) {
  config.Validate();
  dataset.Validate();
  if (config.classifier.input_dim != dataset.dim ||
      config.classifier.output_dim != dataset.classes) {
    throw ConfigError("", "classifier shape does not match the dataset (" +
                              std::to_string(dataset.dim) + " features, " +
                              std::to_string(dataset.classes) + " classes)");
  }
  if (config.mode == TrainMode::kOracle && !dataset.ood_train) {
    throw ConfigError("train.mode",
                      "oracle mode needs an ood_train split in the dataset");
  }

  TrainResult result{InitTrainState(config, dataset), {}, {}};
  TrainState& state = result.state;
  for (std::size_t i = 0; i < config.steps; ++i) {
    const std::vector<std::size_t> idx =
        state.in_batches.Next(state.shuffle_stream);
    const Tensor x = dataset.in_train.x.GatherRows(idx);
    const std::vector<int> y = GatherLabels(dataset.in_train.y, idx);
    Tensor aux;
    if (UsesGenerator(config.mode)) {
      aux = SampleLatent(idx.size(), config.latent_dim, state.latent_stream);
    } else if (config.mode == TrainMode::kOracle) {
      aux = dataset.ood_train->GatherRows(
          state.ood_batches.Next(state.ood_stream));
    }
    const LossBreakdown loss = TrainStep(config, state, x, y, aux);
    result.history.push_back({state.step, config.mode, loss});
    const bool periodic =
        config.snapshot_every > 0 && state.step % config.snapshot_every == 0;
    if (periodic || state.step == config.steps) {
      result.snapshots.push_back(TakeSnapshot(state));
    }
  }
  if (config.steps == 0) result.snapshots.push_back(TakeSnapshot(state));
  return result;
}

void WriteHistoryCsv(std::ostream& out, std::span<const HistoryRow> rows) {
  out << "step,mode,ce,kl_forward,kl_reverse,gan_d,gan_g,beta\n";
  for (const HistoryRow& r : rows) {
    out << r.step << ',' << TrainModeName(r.mode) << ','
        << FormatDouble(r.loss.ce) << ',' << FormatDouble(r.loss.kl_forward)
        << ',' << FormatDouble(r.loss.kl_reverse) << ','
        << FormatDouble(r.loss.gan_d) << ',' << FormatDouble(r.loss.gan_g)
        << ',' << FormatDouble(r.loss.beta) << '\n';
  }
}

}  // namespace oodforge

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

#include "oodforge/objectives.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace oodforge {

std::string_view GanModeName(GanMode mode) {
  return mode == GanMode::kBoundaryGan ? "boundary_gan" : "conf_gan";
}

namespace {

void RequireClasses(Var logits, const char* op) {
  const Tensor& v = logits.value();
  if (v.rank() != 2 || v.cols() < 2) {
    throw ShapeError(std::string(op) + ": logits must be batch x K with K >= 2, got " +
                     ShapeToString(v.shape()));
  }
}

}  // namespace

Var CrossEntropy(Var logits, std::span<const int> labels) {
  RequireClasses(logits, "cross_entropy");
  const std::size_t n = logits.value().rows();
  const std::size_t k = logits.value().cols();
  if (labels.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " rows");
  }
  Tensor one_hot = Tensor::Zeros(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw std::out_of_range("cross_entropy: label " +
                              std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(k) + ")");
    }
    one_hot(i, labels[i]) = 1.0;
  }
  Var picked = Mul(logits.tape()->Constant(std::move(one_hot)),
                   LogSoftmaxRows(logits));
  return Scale(Sum(picked), -1.0 / static_cast<double>(n));
}

// (1/K) sum_y (log(1/K) - log p_y) = -(1/K) sum_y (log p_y + log K)
Var KlUniformForward(Var logits) {
  RequireClasses(logits, "kl_uniform_forward");
  const double n = static_cast<double>(logits.value().rows());
  const double k = static_cast<double>(logits.value().cols());
  Var shifted = AddScalar(LogSoftmaxRows(logits), std::log(k));
  return Scale(Sum(shifted), -1.0 / (n * k));
}

// sum_y p_y (log p_y + log K)
Var KlUniformReverse(Var logits) {
  RequireClasses(logits, "kl_uniform_reverse");
  const double n = static_cast<double>(logits.value().rows());
  const double k = static_cast<double>(logits.value().cols());
  Var log_p = LogSoftmaxRows(logits);
  Var terms = Mul(Exp(log_p), AddScalar(log_p, std::log(k)));
  return Scale(Sum(terms), 1.0 / n);
}

Var GanDiscriminatorLoss(Var real_logits, Var fake_logits) {
  return Add(Mean(Softplus(Scale(real_logits, -1.0))),
             Mean(Softplus(fake_logits)));
}

Var GeneratorObjective(GanMode mode, Var fake_d_logits, Var fake_class_logits,
                       double beta, bool non_saturating) {
  // mean log(1 - D(G(z))) = -mean softplus(l)
  switch (mode) {
    case GanMode::kBoundaryGan: {
      Var kl = Scale(KlUniformForward(fake_class_logits), beta);
      if (non_saturating) {
        return Add(kl, Mean(Softplus(Scale(fake_d_logits, -1.0))));
      }
      return Sub(kl, Mean(Softplus(fake_d_logits)));
    }
    case GanMode::kConfGan: {
      Var kl = Scale(KlUniformReverse(fake_class_logits), beta);
      return Sub(Mean(Softplus(fake_d_logits)), kl);
    }
  }
  throw std::invalid_argument("generator_objective: unknown mode");
}

Var ClassifierObjective(Var logits_real, std::span<const int> labels,
                        std::optional<Var> logits_fake, double beta) {
  Var ce = CrossEntropy(logits_real, labels);
  if (!logits_fake) return ce;
  return Add(ce, Scale(KlUniformForward(*logits_fake), beta));
}

double Entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

bool LossBreakdown::AllFinite() const { return FirstNonFinite().empty(); }

std::string_view LossBreakdown::FirstNonFinite() const {
  if (!std::isfinite(ce)) return "ce";
  if (!std::isfinite(kl_forward)) return "kl_forward";
  if (!std::isfinite(kl_reverse)) return "kl_reverse";
  if (!std::isfinite(gan_d)) return "gan_d";
  if (!std::isfinite(gan_g)) return "gan_g";
  if (!std::isfinite(classifier_total)) return "classifier_total";
  return {};
}

}  // namespace oodforge

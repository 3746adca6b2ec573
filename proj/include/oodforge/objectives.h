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

#ifndef OODFORGE_OBJECTIVES_H_
#define OODFORGE_OBJECTIVES_H_

#include <optional>
#include <span>
#include <string_view>

#include "oodforge/autodiff.h"

namespace oodforge {

// How the generator plays the joint objective. Boundary samples minimize it
// (low-confidence points near the data); confident samples maximize it.
enum class GanMode { kBoundaryGan, kConfGan };

std::string_view GanModeName(GanMode mode);

// Every log-probability below is taken from logits through log-softmax or
// softplus, never as log(prob).

// Mean over rows of -log softmax(logits)[label].
Var CrossEntropy(Var logits, std::span<const int> labels);

// Mean over rows of KL(U || p) = sum_y (1/K) log((1/K) / p_y).
Var KlUniformForward(Var logits);

// Mean over rows of KL(p || U) = sum_y p_y log(p_y K) = log K - H(p).
Var KlUniformReverse(Var logits);

// -(mean log D(real) + mean log(1 - D(fake))), taking the discriminator's
// pre-sigmoid outputs: -log sigmoid(l) = softplus(-l) and
// -log(1 - sigmoid(l)) = softplus(l).
Var GanDiscriminatorLoss(Var real_logits, Var fake_logits);

// Generator loss to minimize.
//   boundary:  beta * KL(U || p_fake) + mean log(1 - D(G(z)))
//   confident: -(beta * KL(p_fake || U) + mean log(1 - D(G(z))))
// `non_saturating` swaps the boundary generator's GAN part for
// -mean log D(G(z)); it has no effect in confident mode.
Var GeneratorObjective(GanMode mode, Var fake_d_logits, Var fake_class_logits,
                       double beta, bool non_saturating = false);

// cross_entropy(logits_real, labels) + beta * KL(U || p_fake). Without fake
// logits this is the plain cross-entropy.
Var ClassifierObjective(Var logits_real, std::span<const int> labels,
                        std::optional<Var> logits_fake, double beta);

// Shannon entropy in nats; 0 log 0 = 0.
double Entropy(std::span<const double> probs);

// Scalar diagnostics of one training step.
struct LossBreakdown {
  double ce = 0.0;
  double kl_forward = 0.0;
  double kl_reverse = 0.0;
  double gan_d = 0.0;
  double gan_g = 0.0;
  double classifier_total = 0.0;  // ce + beta * kl_forward
  double beta = 0.0;

  bool AllFinite() const;
  // Name of the first non-finite component, or empty.
  std::string_view FirstNonFinite() const;
};

}  // namespace oodforge

#endif  // OODFORGE_OBJECTIVES_H_

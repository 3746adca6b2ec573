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

#ifndef OODFORGE_DETECTION_H_
#define OODFORGE_DETECTION_H_

#include <span>
#include <vector>

#include "oodforge/autodiff.h"
#include "oodforge/models.h"

namespace oodforge {

// Max-softmax scores of in-distribution and OOD test points. A point is
// called in-distribution when its score is at or above the threshold.
struct ScoreSet {
  std::vector<double> in;
  std::vector<double> out;

  // Both lists non-empty with every score in (0, 1]. Throws
  // std::invalid_argument.
  void Validate() const;
};

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;  // fraction of in-scores >= threshold
  double tnr = 0.0;  // fraction of out-scores < threshold
};

// Ordered by increasing threshold: -inf, midpoints between consecutive
// distinct pooled scores, +inf.
using RocCurve = std::vector<RocPoint>;

// max_y softmax(logits)_y for every row.
std::vector<double> MaxSoftmaxScores(const Tensor& logits);
std::vector<double> MaxSoftmaxScores(const ModelSpec& spec,
                                     const ModelParams& params,
                                     const Tensor& x);

// Fraction of rows whose argmax logit equals the label.
double ClassificationAccuracy(const Tensor& logits, std::span<const int> labels);

RocCurve ComputeRoc(const ScoreSet& scores);

// P(in-score > out-score) + 0.5 P(tie), from average ranks.
double Auroc(const ScoreSet& scores);

// Trapezoidal area under the curve in (1 - TNR, TPR) space.
double AurocTrapezoid(const RocCurve& curve);

// TNR at the largest threshold whose TPR >= target. No interpolation.
double TnrAtTpr(const ScoreSet& scores, double target = 0.95);

// max over thresholds of (TPR + TNR) / 2, i.e. equal class priors.
double DetectionAccuracy(const ScoreSet& scores);

}  // namespace oodforge

#endif  // OODFORGE_DETECTION_H_

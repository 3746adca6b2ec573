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

#include "oodforge/detection.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oodforge {

void ScoreSet::Validate() const {
  if (in.empty() || out.empty()) {
    throw std::invalid_argument("ScoreSet: in and out scores must be non-empty");
  }
  auto check = [](const std::vector<double>& v) {
    for (double s : v) {
      if (!(s > 0.0 && s <= 1.0)) {
        throw std::invalid_argument("ScoreSet: score " + std::to_string(s) +
                                    " outside (0, 1]");
      }
    }
  };
  check(in);
  check(out);
}

std::vector<double> MaxSoftmaxScores(const Tensor& logits) {
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  std::vector<double> scores(n);
  for (std::size_t r = 0; r < n; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, logits(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(logits(r, c) - mx);
    scores[r] = 1.0 / z;
  }
  return scores;
}

std::vector<double> MaxSoftmaxScores(const ModelSpec& spec,
                                     const ModelParams& params,
                                     const Tensor& x) {
  return MaxSoftmaxScores(Predict(spec, params, x));
}

double ClassificationAccuracy(const Tensor& logits,
                              std::span<const int> labels) {
  if (labels.size() != logits.rows() || labels.empty()) {
    throw std::invalid_argument("ClassificationAccuracy: label count mismatch");
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    if (static_cast<int>(best) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

RocCurve ComputeRoc(const ScoreSet& scores) {
  scores.Validate();
  std::vector<double> in = scores.in;
  std::vector<double> out = scores.out;
  std::sort(in.begin(), in.end());
  std::sort(out.begin(), out.end());
  std::vector<double> pooled = in;
  pooled.insert(pooled.end(), out.begin(), out.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> thresholds{-inf};
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    double mid = pooled[i] + 0.5 * (pooled[i + 1] - pooled[i]);
    // Adjacent doubles: the midpoint can round down onto the lower score.
    if (mid <= pooled[i]) mid = pooled[i + 1];
    thresholds.push_back(mid);
  }
  thresholds.push_back(inf);

  const double n_in = static_cast<double>(in.size());
  const double n_out = static_cast<double>(out.size());
  RocCurve curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto accepted =
        in.end() - std::lower_bound(in.begin(), in.end(), t);
    const auto rejected = std::lower_bound(out.begin(), out.end(), t) - out.begin();
    curve.push_back({t, static_cast<double>(accepted) / n_in,
                     static_cast<double>(rejected) / n_out});
  }
  return curve;
}

double Auroc(const ScoreSet& scores) {
  scores.Validate();
  struct Item {
    double score;
    bool is_in;
  };
  std::vector<Item> items;
  items.reserve(scores.in.size() + scores.out.size());
  for (double s : scores.in) items.push_back({s, true});
  for (double s : scores.out) items.push_back({s, false});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });

  // Sum of 1-based ranks of the in-scores, ties sharing their average rank.
  // Ranks are kept doubled so every quantity stays an exact integer.
  double doubled_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    std::size_t in_count = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      if (items[j].is_in) ++in_count;
      ++j;
    }
    const double doubled_avg_rank = static_cast<double>(i + 1 + j);
    doubled_rank_sum += doubled_avg_rank * static_cast<double>(in_count);
    i = j;
  }
  const double n_in = static_cast<double>(scores.in.size());
  const double n_out = static_cast<double>(scores.out.size());
  const double doubled_u = doubled_rank_sum - n_in * (n_in + 1.0);
  return doubled_u / (2.0 * n_in * n_out);
}

double AurocTrapezoid(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double fpr_a = 1.0 - curve[i].tnr;
    const double fpr_b = 1.0 - curve[i + 1].tnr;
    area += (fpr_a - fpr_b) * 0.5 * (curve[i].tpr + curve[i + 1].tpr);
  }
  return area;
}

double TnrAtTpr(const ScoreSet& scores, double target) {
  if (!(target > 0.0 && target <= 1.0)) {
    throw std::invalid_argument("TnrAtTpr: target must be in (0, 1]");
  }
  const RocCurve curve = ComputeRoc(scores);
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    if (it->tpr >= target) return it->tnr;
  }
  return curve.front().tnr;
}

double DetectionAccuracy(const ScoreSet& scores) {
  double best = 0.0;
  for (const RocPoint& p : ComputeRoc(scores)) {
    best = std::max(best, 0.5 * (p.tpr + p.tnr));
  }
  return best;
}

}  // namespace oodforge

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

#ifndef OODFORGE_RANDOM_H_
#define OODFORGE_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace oodforge {

// Deterministic generator keyed by (seed, name). Independent names give
// independent streams, so consuming one stream never shifts another.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view name);

  double Uniform(double lo, double hi);
  double Normal();
  // Uniform integer in [0, n).
  std::uint64_t Index(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stable 64-bit mix of a seed and a name.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view name);

}  // namespace oodforge

#endif  // OODFORGE_RANDOM_H_

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

#ifndef OODFORGE_MODELS_H_
#define OODFORGE_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodforge/autodiff.h"
#include "oodforge/random.h"

namespace oodforge {

enum class Activation { kRelu, kLeakyRelu, kTanh };
enum class Head { kLogits, kSigmoid, kTanh };

std::string_view ActivationName(Activation a);
Activation ParseActivation(std::string_view name);
std::string_view HeadName(Head h);
Head ParseHead(std::string_view name);

// Fully connected network: input -> hidden... -> output, with `activation`
// after every hidden layer and `head` on the output.
struct ModelSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 1;
  Activation activation = Activation::kRelu;
  Head head = Head::kLogits;

  // Throws std::invalid_argument on a zero dimension.
  void Validate() const;
  std::size_t num_layers() const { return hidden.size() + 1; }

  // Default shapes: in -> 64 -> 64 -> K logits.
  static ModelSpec Classifier(std::size_t input_dim, std::size_t classes);
  // latent -> 64 -> 64 -> d, tanh head.
  static ModelSpec Generator(std::size_t latent_dim, std::size_t output_dim);
  // d -> 64 -> 64 -> 1, leaky ReLU hidden, sigmoid head.
  static ModelSpec Discriminator(std::size_t input_dim);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct Parameter {
  std::size_t layer = 0;
  std::string name;  // "weight" or "bias"
  Tensor value;
};

// Ordered (weight, bias) pairs, one per layer. Weights are fan_in x fan_out,
// biases 1 x fan_out.
struct ModelParams {
  std::vector<Parameter> entries;

  std::vector<Tensor> Values() const;
  // Replaces each value in order; shapes must match.
  void Assign(std::vector<Tensor> values);
  bool AllFinite() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

// Glorot-uniform weights in (-a, a), a = sqrt(6 / (fan_in + fan_out)); zero
// biases.
ModelParams InitParams(const ModelSpec& spec, std::uint64_t seed);

// All-zero parameters with the shapes of `spec`.
ModelParams ZeroParams(const ModelSpec& spec);

// Binds parameters to `tape`, as leaves when `trainable`, else as constants.
std::vector<Var> BindParams(Tape& tape, const ModelParams& params,
                            bool trainable);

// Network output before the head nonlinearity. For a sigmoid head this is
// the logit log(p / (1 - p)).
Var ForwardPreHead(const ModelSpec& spec, std::span<const Var> params, Var x);
Var Forward(const ModelSpec& spec, std::span<const Var> params, Var x);

// Value-only forward pass on a private tape.
Tensor Predict(const ModelSpec& spec, const ModelParams& params,
               const Tensor& x);

// batch x dim matrix of i.i.d. standard normals.
Tensor SampleLatent(std::size_t batch, std::size_t dim, RandomStream& stream);

// Parameter CSV: `model,layer,name,index,value`, one row per entry, values in
// shortest round-trip form.
void WriteParamsCsvHeader(std::ostream& out);
void WriteParamsCsv(std::ostream& out, std::string_view model,
                    const ModelParams& params);

// Reads the rows of `model` from a parameter CSV into parameters shaped by
// `spec`. Every entry must be present exactly once.
ModelParams ReadParamsCsv(std::istream& in, std::string_view model,
                          const ModelSpec& spec);

}  // namespace oodforge

#endif  // OODFORGE_MODELS_H_

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

#include "oodforge/models.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "oodforge/float_format.h"

namespace oodforge {

std::string_view ActivationName(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kLeakyRelu:
      return "leaky_relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "?";
}

Activation ParseActivation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) +
                              "'");
}

std::string_view HeadName(Head h) {
  switch (h) {
    case Head::kLogits:
      return "logits";
    case Head::kSigmoid:
      return "sigmoid";
    case Head::kTanh:
      return "tanh";
  }
  return "?";
}

Head ParseHead(std::string_view name) {
  if (name == "logits") return Head::kLogits;
  if (name == "sigmoid") return Head::kSigmoid;
  if (name == "tanh") return Head::kTanh;
  throw std::invalid_argument("unknown head '" + std::string(name) + "'");
}

void ModelSpec::Validate() const {
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("ModelSpec: dimensions must be >= 1");
  }
  for (std::size_t h : hidden) {
    if (h == 0) throw std::invalid_argument("ModelSpec: zero hidden width");
  }
}

ModelSpec ModelSpec::Classifier(std::size_t input_dim, std::size_t classes) {
  return {input_dim, {64, 64}, classes, Activation::kRelu, Head::kLogits};
}

ModelSpec ModelSpec::Generator(std::size_t latent_dim,
                               std::size_t output_dim) {
  return {latent_dim, {64, 64}, output_dim, Activation::kRelu, Head::kTanh};
}

ModelSpec ModelSpec::Discriminator(std::size_t input_dim) {
  return {input_dim, {64, 64}, 1, Activation::kLeakyRelu, Head::kSigmoid};
}

std::vector<Tensor> ModelParams::Values() const {
  std::vector<Tensor> out;
  out.reserve(entries.size());
  for (const Parameter& p : entries) out.push_back(p.value);
  return out;
}

void ModelParams::Assign(std::vector<Tensor> values) {
  if (values.size() != entries.size()) {
    throw ShapeError("ModelParams::Assign: wrong tensor count");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].SameShape(entries[i].value)) {
      throw ShapeError("ModelParams::Assign: shape mismatch for layer " +
                       std::to_string(entries[i].layer) + " " +
                       entries[i].name);
    }
    entries[i].value = std::move(values[i]);
  }
}

bool ModelParams::AllFinite() const {
  for (const Parameter& p : entries) {
    if (!p.value.AllFinite()) return false;
  }
  return true;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const Parameter& x = a.entries[i];
    const Parameter& y = b.entries[i];
    if (x.layer != y.layer || x.name != y.name || !(x.value == y.value)) {
      return false;
    }
  }
  return true;
}

namespace {

std::vector<std::size_t> LayerWidths(const ModelSpec& spec) {
  std::vector<std::size_t> widths{spec.input_dim};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.output_dim);
  return widths;
}

}  // namespace

ModelParams ZeroParams(const ModelSpec& spec) {
  spec.Validate();
  const std::vector<std::size_t> widths = LayerWidths(spec);
  ModelParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    params.entries.push_back({l, "weight", Tensor::Zeros(widths[l], widths[l + 1])});
    params.entries.push_back({l, "bias", Tensor::Zeros(1, widths[l + 1])});
  }
  return params;
}

ModelParams InitParams(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams params = ZeroParams(spec);
  RandomStream stream(seed, "init");
  for (Parameter& p : params.entries) {
    if (p.name != "weight") continue;
    const double fan_in = static_cast<double>(p.value.rows());
    const double fan_out = static_cast<double>(p.value.cols());
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : p.value.data()) w = stream.Uniform(-bound, bound);
  }
  return params;
}

std::vector<Var> BindParams(Tape& tape, const ModelParams& params,
                            bool trainable) {
  std::vector<Var> vars;
  vars.reserve(params.entries.size());
  for (const Parameter& p : params.entries) {
    vars.push_back(trainable ? tape.Leaf(p.value) : tape.Constant(p.value));
  }
  return vars;
}

Var ForwardPreHead(const ModelSpec& spec, std::span<const Var> params,
                   Var x) {
  if (params.size() != 2 * spec.num_layers()) {
    throw ShapeError("forward: expected " +
                     std::to_string(2 * spec.num_layers()) +
                     " parameter tensors, got " +
                     std::to_string(params.size()));
  }
  if (x.value().rank() != 2 || x.value().cols() != spec.input_dim) {
    throw ShapeError("forward: input " + ShapeToString(x.shape()) +
                     " does not match input dim " +
                     std::to_string(spec.input_dim));
  }
  Var h = x;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    h = Add(MatMul(h, params[2 * l]), params[2 * l + 1]);
    if (l + 1 == spec.num_layers()) break;
    switch (spec.activation) {
      case Activation::kRelu:
        h = Relu(h);
        break;
      case Activation::kLeakyRelu:
        h = LeakyRelu(h);
        break;
      case Activation::kTanh:
        h = Tanh(h);
        break;
    }
  }
  return h;
}

Var Forward(const ModelSpec& spec, std::span<const Var> params, Var x) {
  Var out = ForwardPreHead(spec, params, x);
  switch (spec.head) {
    case Head::kLogits:
      return out;
    case Head::kSigmoid:
      return Sigmoid(out);
    case Head::kTanh:
      return Tanh(out);
  }
  return out;
}

Tensor Predict(const ModelSpec& spec, const ModelParams& params,
               const Tensor& x) {
  Tape tape;
  std::vector<Var> vars = BindParams(tape, params, false);
  return Forward(spec, vars, tape.Constant(x)).value();
}

Tensor SampleLatent(std::size_t batch, std::size_t dim, RandomStream& stream) {
  if (batch == 0 || dim == 0) {
    throw std::invalid_argument("SampleLatent: batch and dim must be >= 1");
  }
  std::vector<double> z(batch * dim);
  for (double& v : z) v = stream.Normal();
  return Tensor::Matrix(batch, dim, std::move(z));
}

void WriteParamsCsvHeader(std::ostream& out) {
  out << "model,layer,name,index,value\n";
}

void WriteParamsCsv(std::ostream& out, std::string_view model,
                    const ModelParams& params) {
  for (const Parameter& p : params.entries) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      out << model << ',' << p.layer << ',' << p.name << ',' << i << ','
          << FormatDouble(p.value[i]) << '\n';
    }
  }
}

ModelParams ReadParamsCsv(std::istream& in, std::string_view model,
                          const ModelSpec& spec) {
  ModelParams params = ZeroParams(spec);
  std::vector<std::vector<bool>> seen;
  for (const Parameter& p : params.entries) {
    seen.emplace_back(p.value.size(), false);
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    if (line_no == 1 && line.rfind("model,", 0) == 0) continue;
    const auto fields = SplitCsv(line);
    const std::string where = "parameter CSV line " + std::to_string(line_no);
    if (fields.size() != 5) {
      throw std::runtime_error(where + ": expected 5 fields");
    }
    if (Trim(fields[0]) != model) continue;
    try {
      const long long layer = ParseInt(fields[1]);
      const std::string_view name = Trim(fields[2]);
      const long long index = ParseInt(fields[3]);
      const double value = ParseDouble(fields[4]);
      std::size_t slot = params.entries.size();
      for (std::size_t k = 0; k < params.entries.size(); ++k) {
        if (static_cast<long long>(params.entries[k].layer) == layer &&
            params.entries[k].name == name) {
          slot = k;
          break;
        }
      }
      if (slot == params.entries.size() || index < 0 ||
          static_cast<std::size_t>(index) >= params.entries[slot].value.size()) {
        throw std::runtime_error("entry does not fit the model spec");
      }
      if (seen[slot][index]) throw std::runtime_error("duplicate entry");
      seen[slot][index] = true;
      params.entries[slot].value[index] = value;
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    for (bool s : seen[k]) {
      if (!s) {
        throw std::runtime_error("parameter CSV: missing entries for " +
                                 std::string(model) + " layer " +
                                 std::to_string(params.entries[k].layer) +
                                 " " + params.entries[k].name);
      }
    }
  }
  return params;
}

}  // namespace oodforge

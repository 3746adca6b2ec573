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

#include "oodforge/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

namespace oodforge {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor::Tensor() : shape_{1, 1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) {
    throw ShapeError("Tensor: empty shape");
  }
  std::size_t n = 1;
  for (std::size_t extent : shape_) {
    if (extent == 0) {
      throw ShapeError("Tensor: zero extent in shape " +
                       ShapeToString(shape_));
    }
    n *= extent;
  }
  if (n != data_.size()) {
    throw ShapeError("Tensor: shape " + ShapeToString(shape_) + " needs " +
                     std::to_string(n) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::Zeros(std::size_t rows, std::size_t cols) {
  return Filled(rows, cols, 0.0);
}

Tensor Tensor::Filled(std::size_t rows, std::size_t cols, double value) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
}

Tensor Tensor::Scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n > 0 ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& row : rows) {
    if (row.size() != m) {
      throw ShapeError("Tensor::FromRows: ragged rows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({n, m}, std::move(data));
}

Tensor Tensor::ZerosLike(const Tensor& other) {
  return Tensor(other.shape_, std::vector<double>(other.size(), 0.0));
}

std::size_t Tensor::rows() const {
  return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const {
  return shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("Tensor::item on shape " + ShapeToString(shape_));
  }
  return data_[0];
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor Tensor::RowSlice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > rows()) {
    throw ShapeError("Tensor::RowSlice out of range on " +
                     ShapeToString(shape_));
  }
  const std::size_t m = cols();
  std::vector<double> out(data_.begin() + begin * m,
                          data_.begin() + (begin + count) * m);
  return Tensor({count, m}, std::move(out));
}

Tensor Tensor::GatherRows(std::span<const std::size_t> indices) const {
  const std::size_t m = cols();
  std::vector<double> out;
  out.reserve(indices.size() * m);
  for (std::size_t r : indices) {
    if (r >= rows()) {
      throw ShapeError("Tensor::GatherRows index out of range");
    }
    out.insert(out.end(), data_.begin() + r * m, data_.begin() + (r + 1) * m);
  }
  return Tensor({indices.size(), m}, std::move(out));
}

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: unbound handle");
  return tape_->nodes_[id_].value;
}

bool Var::requires_grad() const {
  if (tape_ == nullptr) throw std::logic_error("Var: unbound handle");
  return tape_->nodes_[id_].requires_grad;
}

void Tape::CheckOwned(Var v, const char* op) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw std::logic_error(std::string(op) +
                           ": operand belongs to a different tape");
  }
}

Var Tape::Leaf(Tensor value) {
  if (!value.AllFinite()) {
    throw NumericalError("Tape::Leaf: non-finite value");
  }
  nodes_.push_back({std::move(value), {}, nullptr, true});
  leaves_.push_back(nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::Constant(Tensor value) {
  if (!value.AllFinite()) {
    throw NumericalError("Tape::Constant: non-finite value");
  }
  nodes_.push_back({std::move(value), {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  if (consumed_) {
    throw std::logic_error("Tape::Record: tape already consumed by Backward");
  }
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (Var v : inputs) {
    CheckOwned(v, "Tape::Record");
    node.inputs.push_back(v.id_);
    node.requires_grad = node.requires_grad || nodes_[v.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

std::vector<Tensor> Tape::Backward(Var loss) {
  CheckOwned(loss, "Tape::Backward");
  if (consumed_) {
    throw std::logic_error("Tape::Backward: tape already used");
  }
  if (nodes_[loss.id_].value.size() != 1) {
    throw ShapeError("Tape::Backward: loss must be scalar, got " +
                     ShapeToString(nodes_[loss.id_].value.shape()));
  }
  consumed_ = true;

  // Gradients are allocated on first use; nodes outside the loss's ancestry
  // never get one.
  std::vector<Tensor> grads(nodes_.size());
  std::vector<bool> has_grad(nodes_.size(), false);
  grads[loss.id_] = Tensor(nodes_[loss.id_].value.shape(), {1.0});
  has_grad[loss.id_] = true;

  std::vector<const Tensor*> input_values;
  std::vector<Tensor*> input_grads;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!has_grad[id] || !node.backward) continue;
    input_values.clear();
    input_grads.clear();
    for (std::size_t in : node.inputs) {
      input_values.push_back(&nodes_[in].value);
      if (nodes_[in].requires_grad) {
        if (!has_grad[in]) {
          grads[in] = Tensor::ZerosLike(nodes_[in].value);
          has_grad[in] = true;
        }
        input_grads.push_back(&grads[in]);
      } else {
        input_grads.push_back(nullptr);
      }
    }
    node.backward(grads[id], node.value, input_values, input_grads);
  }

  std::vector<Tensor> out;
  out.reserve(leaves_.size());
  for (std::size_t leaf : leaves_) {
    out.push_back(has_grad[leaf] ? std::move(grads[leaf])
                                 : Tensor::ZerosLike(nodes_[leaf].value));
  }
  for (const Tensor& g : out) {
    if (!g.AllFinite()) {
      throw NumericalError("Tape::Backward: non-finite gradient");
    }
  }
  return out;
}

namespace {

Tape& SameTape(Var x, Var y, const char* op) {
  if (x.tape() == nullptr || x.tape() != y.tape()) {
    throw std::logic_error(std::string(op) +
                           ": operands on different tapes");
  }
  return *x.tape();
}

void RequireRank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " +
                     ShapeToString(t.shape()));
  }
}

[[noreturn]] void Mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   ShapeToString(a.shape()) + " and " +
                   ShapeToString(b.shape()));
}

Tensor CheckFinite(Tensor t, const char* op) {
  if (!t.AllFinite()) {
    throw NumericalError(std::string(op) + ": non-finite result");
  }
  return t;
}

// out (+)= a . b, with optional transposes. Loops ordered for row-major
// contiguity in the inner dimension.
void Gemm(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b,
          Tensor& out) {
  const std::size_t n = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t m = trans_b ? b.rows() : b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();
  if (!trans_b) {
    for (std::size_t i = 0; i < n; ++i) {
      double* row = po + i * m;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? pa[p * lda + i] : pa[i * lda + p];
        const double* brow = pb + p * ldb;
        for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        const double* brow = pb + j * ldb;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = trans_a ? pa[p * lda + i] : pa[i * lda + p];
          acc += av * brow[p];
        }
        po[i * m + j] += acc;
      }
    }
  }
}

template <typename F, typename D>
Var Unary(Var x, const char* op, F forward, D derivative) {
  const Tensor& xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(xv[i]);
  Tensor value = CheckFinite(Tensor(xv.shape(), std::move(out)), op);
  return x.tape()->Record(
      std::move(value), {x},
      [derivative](const Tensor& up, const Tensor& y,
                   std::span<const Tensor* const> in,
                   std::span<Tensor* const> grads) {
        Tensor& gx = *grads[0];
        const Tensor& xv = *in[0];
        for (std::size_t i = 0; i < gx.size(); ++i) {
          gx[i] += up[i] * derivative(xv[i], y[i]);
        }
      });
}

}  // namespace

// z = x + y, or z[i, j] = x[i, j] + y[0, j] for a row bias y
// dx = dz
// dy = dz, summed over rows when broadcast
Var Add(Var x, Var y) {
  Tape& tape = SameTape(x, y, "add");
  const Tensor& a = x.value();
  const Tensor& b = y.value();
  const bool broadcast = !a.SameShape(b);
  if (broadcast) {
    RequireRank2(a, "add");
    RequireRank2(b, "add");
    if (b.rows() != 1 || b.cols() != a.cols()) Mismatch("add", a, b);
  }
  const std::size_t m = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] + (broadcast ? b[i % m] : b[i]);
  }
  return tape.Record(
      CheckFinite(Tensor(a.shape(), std::move(out)), "add"), {x, y},
      [broadcast, m](const Tensor& up, const Tensor&,
                     std::span<const Tensor* const>,
                     std::span<Tensor* const> grads) {
        if (grads[0] != nullptr) {
          for (std::size_t i = 0; i < up.size(); ++i) (*grads[0])[i] += up[i];
        }
        if (grads[1] != nullptr) {
          for (std::size_t i = 0; i < up.size(); ++i) {
            (*grads[1])[broadcast ? i % m : i] += up[i];
          }
        }
      });
}

// z = x - y
// dx = dz
// dy = -dz
Var Sub(Var x, Var y) {
  Tape& tape = SameTape(x, y, "sub");
  const Tensor& a = x.value();
  const Tensor& b = y.value();
  if (!a.SameShape(b)) Mismatch("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return tape.Record(
      CheckFinite(Tensor(a.shape(), std::move(out)), "sub"), {x, y},
      [](const Tensor& up, const Tensor&, std::span<const Tensor* const>,
         std::span<Tensor* const> grads) {
        if (grads[0] != nullptr) {
          for (std::size_t i = 0; i < up.size(); ++i) (*grads[0])[i] += up[i];
        }
        if (grads[1] != nullptr) {
          for (std::size_t i = 0; i < up.size(); ++i) (*grads[1])[i] -= up[i];
        }
      });
}

// z = x * y
// dx = dz * y
// dy = x * dz
Var Mul(Var x, Var y) {
  Tape& tape = SameTape(x, y, "mul");
  const Tensor& a = x.value();
  const Tensor& b = y.value();
  if (!a.SameShape(b)) Mismatch("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return tape.Record(
      CheckFinite(Tensor(a.shape(), std::move(out)), "mul"), {x, y},
      [](const Tensor& up, const Tensor&, std::span<const Tensor* const> in,
         std::span<Tensor* const> grads) {
        if (grads[0] != nullptr) {
          for (std::size_t i = 0; i < up.size(); ++i) {
            (*grads[0])[i] += up[i] * (*in[1])[i];
          }
        }
        if (grads[1] != nullptr) {
          for (std::size_t i = 0; i < up.size(); ++i) {
            (*grads[1])[i] += up[i] * (*in[0])[i];
          }
        }
      });
}

// z = x . y
// dx = dz . y^T
// dy = x^T . dz
Var MatMul(Var x, Var y) {
  Tape& tape = SameTape(x, y, "matmul");
  const Tensor& a = x.value();
  const Tensor& b = y.value();
  RequireRank2(a, "matmul");
  RequireRank2(b, "matmul");
  if (a.cols() != b.rows()) Mismatch("matmul", a, b);
  Tensor out = Tensor::Zeros(a.rows(), b.cols());
  Gemm(a, false, b, false, out);
  return tape.Record(
      CheckFinite(std::move(out), "matmul"), {x, y},
      [](const Tensor& up, const Tensor&, std::span<const Tensor* const> in,
         std::span<Tensor* const> grads) {
        if (grads[0] != nullptr) Gemm(up, false, *in[1], true, *grads[0]);
        if (grads[1] != nullptr) Gemm(*in[0], true, up, false, *grads[1]);
      });
}

Var Relu(Var x) {
  return Unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var LeakyRelu(Var x, double alpha) {
  return Unary(
      x, "leaky_relu", [alpha](double v) { return v > 0.0 ? v : alpha * v; },
      [alpha](double v, double) { return v > 0.0 ? 1.0 : alpha; });
}

// dx = (1 - y^2) dz
Var Tanh(Var x) {
  return Unary(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

// dx = y (1 - y) dz
Var Sigmoid(Var x) {
  return Unary(
      x, "sigmoid",
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

// dx = sigmoid(x) dz
Var Softplus(Var x) {
  return Unary(
      x, "softplus",
      [](double v) {
        return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
      },
      [](double v, double) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
}

// dx = y dz
Var Exp(Var x) {
  return Unary(
      x, "exp", [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

// dx = dz / x
Var Log(Var x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) {
      throw DomainError("log: non-positive input " + std::to_string(v));
    }
  }
  return Unary(
      x, "log", [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Var Sum(Var x) {
  const Tensor& a = x.value();
  double total = 0.0;
  for (double v : a.data()) total += v;
  return x.tape()->Record(
      CheckFinite(Tensor::Scalar(total), "sum"), {x},
      [](const Tensor& up, const Tensor&, std::span<const Tensor* const>,
         std::span<Tensor* const> grads) {
        const double g = up[0];
        for (double& v : grads[0]->data()) v += g;
      });
}

Var Mean(Var x) {
  const Tensor& a = x.value();
  const double n = static_cast<double>(a.size());
  double total = 0.0;
  for (double v : a.data()) total += v;
  return x.tape()->Record(
      CheckFinite(Tensor::Scalar(total / n), "mean"), {x},
      [n](const Tensor& up, const Tensor&, std::span<const Tensor* const>,
          std::span<Tensor* const> grads) {
        const double g = up[0] / n;
        for (double& v : grads[0]->data()) v += g;
      });
}

// y_i = exp(x_i - max) / sum_j exp(x_j - max)
// dx_i = y_i (dz_i - sum_j dz_j y_j)
Var SoftmaxRows(Var x) {
  const Tensor& a = x.value();
  RequireRank2(a, "softmax_rows");
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = a.data().data() + r * m;
    const double mx = *std::max_element(row, row + m);
    double z = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      out[r * m + c] = std::exp(row[c] - mx);
      z += out[r * m + c];
    }
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] /= z;
  }
  return x.tape()->Record(
      CheckFinite(Tensor(a.shape(), std::move(out)), "softmax_rows"), {x},
      [n, m](const Tensor& up, const Tensor& y,
             std::span<const Tensor* const>, std::span<Tensor* const> grads) {
        Tensor& g = *grads[0];
        for (std::size_t r = 0; r < n; ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < m; ++c) {
            dot += up[r * m + c] * y[r * m + c];
          }
          for (std::size_t c = 0; c < m; ++c) {
            g[r * m + c] += y[r * m + c] * (up[r * m + c] - dot);
          }
        }
      });
}

// y_i = (x_i - max) - log sum_j exp(x_j - max)
// dx_i = dz_i - softmax_i * sum_j dz_j
Var LogSoftmaxRows(Var x) {
  const Tensor& a = x.value();
  RequireRank2(a, "log_softmax_rows");
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = a.data().data() + r * m;
    const double mx = *std::max_element(row, row + m);
    double z = 0.0;
    for (std::size_t c = 0; c < m; ++c) z += std::exp(row[c] - mx);
    const double log_z = std::log(z);
    for (std::size_t c = 0; c < m; ++c) {
      out[r * m + c] = (row[c] - mx) - log_z;
    }
  }
  return x.tape()->Record(
      CheckFinite(Tensor(a.shape(), std::move(out)), "log_softmax_rows"), {x},
      [n, m](const Tensor& up, const Tensor& y,
             std::span<const Tensor* const>, std::span<Tensor* const> grads) {
        Tensor& g = *grads[0];
        for (std::size_t r = 0; r < n; ++r) {
          double total = 0.0;
          for (std::size_t c = 0; c < m; ++c) total += up[r * m + c];
          for (std::size_t c = 0; c < m; ++c) {
            g[r * m + c] += up[r * m + c] - std::exp(y[r * m + c]) * total;
          }
        }
      });
}

Var ConcatRows(Var top, Var bottom) {
  Tape& tape = SameTape(top, bottom, "concat_rows");
  const Tensor& a = top.value();
  const Tensor& b = bottom.value();
  RequireRank2(a, "concat_rows");
  RequireRank2(b, "concat_rows");
  if (a.cols() != b.cols()) Mismatch("concat_rows", a, b);
  std::vector<double> out(a.values());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t split = a.size();
  return tape.Record(
      Tensor({a.rows() + b.rows(), a.cols()}, std::move(out)), {top, bottom},
      [split](const Tensor& up, const Tensor&, std::span<const Tensor* const>,
              std::span<Tensor* const> grads) {
        if (grads[0] != nullptr) {
          for (std::size_t i = 0; i < split; ++i) (*grads[0])[i] += up[i];
        }
        if (grads[1] != nullptr) {
          for (std::size_t i = split; i < up.size(); ++i) {
            (*grads[1])[i - split] += up[i];
          }
        }
      });
}

Var Scale(Var x, double c) {
  return Unary(
      x, "scale", [c](double v) { return c * v; },
      [c](double, double) { return c; });
}

Var AddScalar(Var x, double c) {
  return Unary(
      x, "add_scalar", [c](double v) { return v + c; },
      [](double, double) { return 1.0; });
}

GradCheckResult FiniteDiffCheck(const TapeFunction& f,
                                const std::vector<Tensor>& params,
                                double step, std::size_t max_coordinates,
                                std::uint64_t seed) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("FiniteDiffCheck: step must be positive");
  }

  auto evaluate = [&f](const std::vector<Tensor>& p) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(p.size());
    for (const Tensor& t : p) leaves.push_back(tape.Constant(t));
    const double value = f(tape, leaves).value().item();
    if (!std::isfinite(value)) {
      throw NumericalError("FiniteDiffCheck: non-finite function value");
    }
    return value;
  };

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Tensor& t : params) leaves.push_back(tape.Leaf(t));
    Var loss = f(tape, leaves);
    if (!std::isfinite(loss.value().item())) {
      throw NumericalError("FiniteDiffCheck: non-finite function value");
    }
    analytic = tape.Backward(loss);
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) coords.emplace_back(t, i);
  }
  if (max_coordinates > 0 && max_coordinates < coords.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coordinates);
  }

  GradCheckResult result;
  std::vector<Tensor> probe = params;
  for (auto [t, i] : coords) {
    const double original = probe[t][i];
    probe[t][i] = original + step;
    const double up = evaluate(probe);
    probe[t][i] = original - step;
    const double down = evaluate(probe);
    probe[t][i] = original;
    const double numeric = (up - down) / (2.0 * step);
    const double exact = analytic[t][i];
    const double denom =
        std::max({std::abs(numeric), std::abs(exact), 1e-8});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(numeric - exact) / denom);
    ++result.coordinates_checked;
  }
  return result;
}

}  // namespace oodforge

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

#ifndef OODFORGE_AUTODIFF_H_
#define OODFORGE_AUTODIFF_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oodforge {

// Shape mismatch between operands. The message names the operation and the
// offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input outside an operation's mathematical domain (e.g. log of 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A NaN or Inf was produced or supplied.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);

// Dense row-major array of doubles. Every extent is positive and
// product(shape) == size(). Arithmetic operations live on the Tape; Tensor is
// a plain value.
class Tensor {
 public:
  // 1x1 zero.
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(std::size_t rows, std::size_t cols);
  static Tensor Filled(std::size_t rows, std::size_t cols, double value);
  static Tensor Scalar(double value);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);
  static Tensor FromRows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor ZerosLike(const Tensor& other);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  // Rank-2 views. Rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
  }

  // Value of a single-element tensor.
  double item() const;
  bool AllFinite() const;
  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }

  // Rows [begin, begin + count) as a new tensor.
  Tensor RowSlice(std::size_t begin, std::size_t count) const;
  // Rows at the given indices, in order.
  Tensor GatherRows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid for the lifetime
// of the tape that produced it.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Local derivative rule of one recorded operation. `upstream` is dL/d(output);
// the rule accumulates into every non-null entry of `input_grads`, which are
// aligned with `inputs`.
using BackwardFn = std::function<void(
    const Tensor& upstream, const Tensor& output,
    std::span<const Tensor* const> inputs, std::span<Tensor* const> input_grads)>;

// Records one forward evaluation for reverse-mode differentiation. Node ids
// are assigned in creation order, so every operation's inputs precede it.
// A tape supports exactly one Backward() call.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Trainable leaf. Gradients are returned in leaf creation order.
  Var Leaf(Tensor value);
  // Value that takes no gradient.
  Var Constant(Tensor value);

  // Appends an operation result. Called by the primitive ops.
  Var Record(Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);

  // Gradient of the scalar `loss` with respect to every leaf, in leaf
  // creation order. Leaves not on a path to `loss` get zeros.
  std::vector<Tensor> Backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_leaves() const { return leaves_.size(); }
  bool consumed() const { return consumed_; }

 private:
  friend class Var;

  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void CheckOwned(Var v, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> leaves_;
  bool consumed_ = false;
};

// Primitive operations. Shapes are rank 2 (rows x cols); scalar results are
// 1x1. The only broadcast is Add(matrix n x m, row 1 x m).

// z = x + y
Var Add(Var x, Var y);
// z = x - y
Var Sub(Var x, Var y);
// z = x * y (elementwise)
Var Mul(Var x, Var y);
// z = x . y
Var MatMul(Var x, Var y);
Var Relu(Var x);
Var LeakyRelu(Var x, double alpha = 0.2);
Var Tanh(Var x);
Var Sigmoid(Var x);
// log(1 + exp(x)), evaluated without overflow.
Var Softplus(Var x);
Var Exp(Var x);
// Requires strictly positive input.
Var Log(Var x);
// Sum / mean of all entries, 1x1.
Var Sum(Var x);
Var Mean(Var x);
Var SoftmaxRows(Var x);
// Row-wise log-softmax with the row max subtracted first.
Var LogSoftmaxRows(Var x);
Var ConcatRows(Var top, Var bottom);
// z = c * x
Var Scale(Var x, double c);
// z = x + c
Var AddScalar(Var x, double c);

// Worst relative error between backward() and central finite differences:
// |a - b| / max(|a|, |b|, 1e-8) over the checked coordinates.
struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

// Builds the scalar to differentiate from leaves bound to `params`.
using TapeFunction =
    std::function<Var(Tape& tape, std::span<const Var> params)>;

// Central-difference gradient check. When `max_coordinates` is nonzero and
// smaller than the total parameter count, that many coordinates are drawn
// uniformly without replacement using `seed`.
GradCheckResult FiniteDiffCheck(const TapeFunction& f,
                                const std::vector<Tensor>& params,
                                double step, std::size_t max_coordinates = 0,
                                std::uint64_t seed = 0);

}  // namespace oodforge

#endif  // OODFORGE_AUTODIFF_H_

// Copyright 2026 The zsrec Authors.
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

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "zsrec/errors.hpp"

namespace zsrec {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using IdMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<Index>;

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {
struct Node;
}

// Dense row-major value array with an optional gradient.
//
// Storage is always a 2-D matrix: the leading dimension is the row count and
// the remaining dimensions are flattened into columns, so an [n, m, d] tensor
// is an n x (m*d) matrix. Scalars are 1x1 and 1-D tensors are n x 1.
//
// Tensor is a handle: copies share the underlying node. Use detach() or
// clone() for an independent value.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Matrix values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor from_values(Shape shape, const std::vector<double>& values,
                            bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  Index dim(std::size_t axis) const;
  Index rank() const { return static_cast<Index>(shape().size()); }
  Index numel() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

  const Matrix& value() const;
  Matrix& mutable_value();
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  // Empty until a backward pass reaches this tensor.
  const Matrix& grad() const;
  Matrix& mutable_grad();
  void zero_grad();

  // Constant copy with no history.
  Tensor detach() const;
  // Independent leaf copy that keeps requires_grad.
  Tensor clone() const;

  std::uint64_t id() const;
  bool same_node(const Tensor& other) const { return node_ == other.node_; }
  const detail::Node* node() const { return node_.get(); }

 private:
  friend struct OpBuilder;
  friend std::vector<Tensor> topological_order(const Tensor& root);
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// Receives the upstream gradient of an op's output. Implementations add into
// the gradients of the op's inputs through OpBuilder::accumulate.
using BackwardFn = std::function<void(const Matrix& grad_out)>;

// Entry point for defining differentiable ops outside the core.
struct OpBuilder {
  // The result requires grad iff any input does; history is kept only then.
  static Tensor make(Shape shape, Matrix value, std::initializer_list<Tensor> inputs,
                     BackwardFn backward);
  static Tensor make(Shape shape, Matrix value, const std::vector<Tensor>& inputs,
                     BackwardFn backward);
  // grad(target) += delta, allocating a zero gradient on first use. No-op for
  // tensors that do not require grad.
  template <typename Derived>
  static void accumulate(const Tensor& target, const Eigen::MatrixBase<Derived>& delta) {
    if (!target.requires_grad()) return;
    Matrix& g = grad_slot(target);
    g += delta;
  }
  static Matrix& grad_slot(const Tensor& target);
  static bool needs_grad(const Tensor& t) { return t.requires_grad(); }
};

// Nodes reachable from root that require grad, inputs before outputs.
std::vector<Tensor> topological_order(const Tensor& root);

// Reverse-mode pass from a scalar loss. Leaf gradients accumulate across
// calls; callers reset them (zero_grad) before each pass.
void backward(const Tensor& loss);

}  // namespace zsrec

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

#include "zsrec/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

namespace zsrec {

const char* error_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kContract: return "contract";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kData: return 3;
    case ErrorKind::kNumeric: return 4;
    case ErrorKind::kContract: return 2;
  }
  return 1;
}

namespace detail {

struct Node {
  std::uint64_t id = 0;
  Shape shape;
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

namespace {
std::atomic<std::uint64_t> next_node_id{1};

std::shared_ptr<Node> new_node(Shape shape, Matrix value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}
}  // namespace

}  // namespace detail

Index numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

std::pair<Index, Index> storage_dims(const Shape& shape) {
  if (shape.empty()) return {1, 1};
  const Index rows = shape[0];
  Index cols = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) cols *= shape[i];
  return {rows, cols};
}

void check_shape(const Shape& shape, const Matrix& values) {
  for (Index d : shape) {
    if (d < 0) throw ContractError("negative dimension in shape " + to_string(shape));
  }
  const auto [rows, cols] = storage_dims(shape);
  if (values.rows() != rows || values.cols() != cols) {
    std::ostringstream os;
    os << "tensor values " << values.rows() << 'x' << values.cols()
       << " do not match shape " << to_string(shape);
    throw ContractError(os.str());
  }
}

}  // namespace

Tensor::Tensor(Shape shape, Matrix values, bool requires_grad) {
  check_shape(shape, values);
  node_ = detail::new_node(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto [rows, cols] = storage_dims(shape);
  return Tensor(std::move(shape), Matrix::Zero(rows, cols), requires_grad);
}

Tensor Tensor::scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return Tensor({}, std::move(m));
}

Tensor Tensor::from_values(Shape shape, const std::vector<double>& values, bool requires_grad) {
  if (static_cast<Index>(values.size()) != zsrec::numel(shape)) {
    throw ContractError("from_values: " + std::to_string(values.size()) +
                        " values for shape " + to_string(shape));
  }
  const auto [rows, cols] = storage_dims(shape);
  Matrix m = Eigen::Map<const Matrix>(values.data(), rows, cols);
  return Tensor(std::move(shape), std::move(m), requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }

Index Tensor::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw ContractError("axis " + std::to_string(axis) + " out of range for " +
                        to_string(node_->shape));
  }
  return node_->shape[axis];
}

Index Tensor::numel() const { return node_->value.size(); }
const Matrix& Tensor::value() const { return node_->value; }
Matrix& Tensor::mutable_value() { return node_->value; }

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return node_->value(0, 0);
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_->grad.size() == node_->value.size(); }
const Matrix& Tensor::grad() const { return node_->grad; }

Matrix& Tensor::mutable_grad() {
  if (!has_grad()) node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

void Tensor::zero_grad() {
  if (has_grad()) node_->grad.setZero();
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }
Tensor Tensor::clone() const { return Tensor(node_->shape, node_->value, node_->requires_grad); }
std::uint64_t Tensor::id() const { return node_->id; }

Tensor OpBuilder::make(Shape shape, Matrix value, const std::vector<Tensor>& inputs,
                       BackwardFn backward) {
  check_shape(shape, value);
  const bool track = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
  auto node = detail::new_node(std::move(shape), std::move(value), track);
  if (track) {
    node->is_leaf = false;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) {
      if (t.requires_grad()) node->inputs.push_back(t.node_);
    }
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor OpBuilder::make(Shape shape, Matrix value, std::initializer_list<Tensor> inputs,
                       BackwardFn backward) {
  return make(std::move(shape), std::move(value), std::vector<Tensor>(inputs),
              std::move(backward));
}

Matrix& OpBuilder::grad_slot(const Tensor& target) {
  return const_cast<Tensor&>(target).mutable_grad();
}

std::vector<Tensor> topological_order(const Tensor& root) {
  std::vector<Tensor> order;
  if (!root.requires_grad()) return order;
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::shared_ptr<detail::Node>> stack{root.node_};
  seen.insert(root.node_.get());
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    for (const auto& in : node->inputs) {
      if (seen.insert(in.get()).second) stack.push_back(in);
    }
    order.push_back(Tensor(std::move(node)));
  }
  // Node ids are issued at creation, so every input has a smaller id than
  // the ops that consume it.
  std::sort(order.begin(), order.end(),
            [](const Tensor& a, const Tensor& b) { return a.id() < b.id(); });
  return order;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;
  std::vector<Tensor> order = topological_order(loss);
  for (Tensor& t : order) {
    if (!t.node()->is_leaf) {
      auto& g = t.mutable_grad();
      g.setZero();
    }
  }
  Tensor root = order.back();
  root.mutable_grad()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const detail::Node* node = it->node();
    if (node->backward && it->has_grad()) node->backward(node->grad);
  }
  // Interior gradients are scratch space; release them with the pass.
  for (Tensor& t : order) {
    if (!t.node()->is_leaf) t.mutable_grad().resize(0, 0);
  }
}

}  // namespace zsrec

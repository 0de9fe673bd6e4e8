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

#include "zsrec/nn.hpp"

#include <cmath>

namespace zsrec {

Tensor xavier_init(const Shape& shape, Rng& rng, bool requires_grad) {
  if (shape.size() != 2) {
    throw ConfigError("xavier_init needs a (fan_in, fan_out) shape, got " + to_string(shape));
  }
  const Index fan_in = shape[0], fan_out = shape[1];
  if (fan_in <= 0 || fan_out <= 0) {
    throw ConfigError("xavier_init: zero dimension in " + to_string(shape));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  double* p = w.data();
  for (Index i = 0; i < w.size(); ++i) p[i] = rng.uniform(-bound, bound);
  return Tensor(shape, std::move(w), requires_grad);
}

Adam::Adam(std::vector<Parameter> params, double learning_rate, double beta1, double beta2,
           double epsilon)
    : params_(std::move(params)) {
  if (!(learning_rate >= 0.0)) {
    throw ConfigError("Adam learning rate must be non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  state_.learning_rate = learning_rate;
  state_.beta1 = beta1;
  state_.beta2 = beta2;
  state_.epsilon = epsilon;
  for (const Parameter& p : params_) {
    state_.first_moment.push_back(Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
    state_.second_moment.push_back(Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
  }
}

void Adam::step() {
  for (const Parameter& p : params_) {
    if (p.tensor.has_grad() && !p.tensor.grad().allFinite()) {
      throw NumericError("non-finite gradient in parameter '" + p.name + "' at step " +
                         std::to_string(state_.step + 1));
    }
  }
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(state_.beta1, t);
  const double c2 = 1.0 - std::pow(state_.beta2, t);
  const double lr = state_.learning_rate;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    Matrix& m = state_.first_moment[i];
    Matrix& v = state_.second_moment[i];
    if (!p.tensor.has_grad()) {
      m *= state_.beta1;
      v *= state_.beta2;
    } else {
      const Matrix& g = p.tensor.grad();
      m = state_.beta1 * m + (1.0 - state_.beta1) * g;
      v = state_.beta2 * v + (1.0 - state_.beta2) * g.cwiseAbs2();
    }
    if (p.freeze_first_row && m.rows() > 0) {
      m.row(0).setZero();
      v.row(0).setZero();
    }
    p.tensor.mutable_value().array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state_.epsilon);
  }
}

void Adam::zero_grad() {
  for (Parameter& p : params_) p.tensor.zero_grad();
}

Dense Dense::init(Index in, Index out, Rng& rng) {
  Dense layer;
  layer.weight = xavier_init({in, out}, rng);
  layer.bias = Tensor::zeros({out}, true);
  return layer;
}

void Dense::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

BatchNorm BatchNorm::init(Index width) {
  BatchNorm bn;
  bn.gamma = Tensor(Shape{width}, Matrix::Ones(width, 1), true);
  bn.beta = Tensor::zeros({width}, true);
  bn.state = BatchNormState::fresh(width);
  return bn;
}

void BatchNorm::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

void BatchNorm::collect_buffers(const std::string& prefix, std::vector<Buffer>& out) {
  out.push_back({prefix + ".running_mean", &state.running_mean});
  out.push_back({prefix + ".running_var", &state.running_var});
}

}  // namespace zsrec

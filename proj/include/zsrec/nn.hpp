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

#include <string>
#include <vector>

#include "zsrec/ops.hpp"

namespace zsrec {

// A trainable tensor plus the name it is checkpointed under.
struct Parameter {
  std::string name;
  Tensor tensor;
  // Row 0 of embedding tables is the padding vector and never moves.
  bool freeze_first_row = false;
};

// Non-trainable state that still belongs in a checkpoint (batch-norm
// running statistics).
struct Buffer {
  std::string name;
  RowVector* values;
};

// Uniform on +-sqrt(6 / (fan_in + fan_out)) for a (fan_in, fan_out) shape.
Tensor xavier_init(const Shape& shape, Rng& rng, bool requires_grad = true);

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// Adam with bias correction over a fixed, ordered parameter list.
class Adam {
 public:
  Adam(std::vector<Parameter> params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  // One update from the gradients currently stored on the parameters. A
  // parameter that has not received a gradient is treated as zero-gradient.
  // Throws NumericError on non-finite gradients, leaving parameters untouched.
  void step();
  void zero_grad();

  const std::vector<Parameter>& parameters() const { return params_; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

 private:
  std::vector<Parameter> params_;
  AdamState state_;
};

// Fully connected layer. The weight is stored (in, out) so forward is x * W.
struct Dense {
  Tensor weight;
  Tensor bias;

  static Dense init(Index in, Index out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  Index in_features() const { return weight.dim(0); }
  Index out_features() const { return weight.dim(1); }
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
};

struct BatchNorm {
  Tensor gamma;
  Tensor beta;
  BatchNormState state;

  static BatchNorm init(Index width);
  Tensor operator()(const Tensor& x, bool training) {
    return batch_norm(x, gamma, beta, state, training);
  }
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
  void collect_buffers(const std::string& prefix, std::vector<Buffer>& out);
};

}  // namespace zsrec

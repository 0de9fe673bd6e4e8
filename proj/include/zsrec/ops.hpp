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

#include <span>

#include "zsrec/random.hpp"
#include "zsrec/tensor.hpp"

namespace zsrec {

enum class Activation { kLeakyRelu, kTanh, kSigmoid };

inline constexpr double kDefaultLeakySlope = 0.01;

// --- Linear algebra ---------------------------------------------------------

// [m x k] * [k x n]. Small products run a plain i-j-k loop so the result is
// reproducible term by term; larger ones go through Eigen's GEMM.
Tensor matmul(const Tensor& a, const Tensor& b);
// x [n x in] * weight [in x out] + bias [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// --- Elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor activation(const Tensor& x, Activation kind, double leaky_slope = kDefaultLeakySlope);
inline Tensor leaky_relu(const Tensor& x, double slope = kDefaultLeakySlope) {
  return activation(x, Activation::kLeakyRelu, slope);
}
inline Tensor tanh(const Tensor& x) { return activation(x, Activation::kTanh); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::kSigmoid); }

// --- Reductions and shape ---------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
// Column-wise concatenation of two tensors with equal row counts.
Tensor concat_cols(const Tensor& a, const Tensor& b);
// [n x m x d] -> [n x d], summing over the slot axis.
Tensor sum_slots(const Tensor& slots);
// out[i] = sum_j weights[i, j] * slots[i, j, :]. weights is [n x m].
Tensor weighted_sum_slots(const Tensor& weights, const Tensor& slots);
// Mean over rows of the row-wise squared L2 distance between two equally
// shaped tensors (viewed as [n x w]).
Tensor squared_error(const Tensor& prediction, const Tensor& target);

// --- Normalisation and regularisation ---------------------------------------

// Softmax over the last axis. Masked entries (mask == false) get exactly zero
// weight. A row with no unmasked entry raises ContractError. For a 1-D input
// the mask is a single row.
Tensor softmax(const Tensor& logits, const Mask& mask);
Tensor softmax(const Tensor& logits);

// Inverted dropout: survivors are scaled by 1/(1-rate), inference is identity.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

struct BatchNormState {
  RowVector running_mean;
  RowVector running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;

  static BatchNormState fresh(Index width);
};

// Per-column normalisation of x [n x d], then gamma * x_hat + beta. Training
// uses batch statistics (n >= 2) and folds them into the running averages;
// inference uses the running averages.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, bool training);

// --- Misc -------------------------------------------------------------------

// Row i comes from `alternative` (consumed in order) when use_alternative[i]
// is set, else from `primary`. Both share trailing dimensions.
Tensor select_rows(const Tensor& primary, const Tensor& alternative,
                   std::span<const bool> use_alternative);

// Rows of x at the given indices, in order.
Tensor gather_rows(const Tensor& x, std::span<const Index> rows);

}  // namespace zsrec

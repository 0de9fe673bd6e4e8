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

#include "zsrec/ranktower.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace zsrec {

Tensor RankingModel::loss(const RankingInputs& inputs, const std::vector<int>& labels,
                          bool training, Rng& rng) {
  return bce_loss(predict(inputs, training, rng), labels);
}

void BaseDNN::build(const FeatureSpec& spec, Rng& rng) { build(4 * spec.embedding_dim, rng); }

void BaseDNN::build(Index input_width, Rng& rng) {
  if (input_width <= 0) throw ConfigError("ranking input width must be positive");
  if (config_.hidden_widths.empty()) throw ConfigError("ranking MLP needs at least one hidden layer");
  if (!(config_.dropout >= 0.0 && config_.dropout < 1.0)) {
    throw ConfigError(fmt::format("dropout must be in [0, 1), got {}", config_.dropout));
  }
  input_width_ = input_width;
  dense_.clear();
  norms_.clear();
  Index in = input_width;
  for (Index w : config_.hidden_widths) {
    if (w <= 0) throw ConfigError(fmt::format("MLP width must be positive, got {}", w));
    dense_.push_back(Dense::init(in, w, rng));
    norms_.push_back(BatchNorm::init(w));
    in = w;
  }
  output_ = Dense::init(in, 1, rng);
}

Tensor BaseDNN::forward(const Tensor& z, bool training, Rng& rng) {
  if (z.rank() != 2 || z.dim(1) != input_width_) {
    throw ConfigError(fmt::format("ranking MLP built for width {}, got input {}", input_width_,
                                  to_string(z.shape())));
  }
  Tensor h = z;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    h = dropout(h, config_.dropout, training, rng);
    h = norms_[i](dense_[i](h), training);
    h = leaky_relu(h, config_.leaky_slope);
  }
  Tensor logits = output_(h);
  return reshape(sigmoid(logits), {z.dim(0)});
}

Tensor BaseDNN::predict(const RankingInputs& inputs, bool training, Rng& rng) {
  return forward(pool_inputs(inputs), training, rng);
}

std::vector<Parameter> BaseDNN::parameters() const {
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    dense_[i].collect(fmt::format("rank.dense{}", i + 1), out);
    norms_[i].collect(fmt::format("rank.bn{}", i + 1), out);
  }
  output_.collect("rank.output", out);
  return out;
}

std::vector<Buffer> BaseDNN::buffers() {
  std::vector<Buffer> out;
  for (std::size_t i = 0; i < norms_.size(); ++i) {
    norms_[i].collect_buffers(fmt::format("rank.bn{}", i + 1), out);
  }
  return out;
}

Tensor sum_pool(const Tensor& slots) { return sum_slots(slots); }

Tensor pool_inputs(const RankingInputs& in) {
  return concat_cols(concat_cols(sum_pool(in.behavior), sum_pool(in.attributes)),
                     concat_cols(sum_pool(in.context), sum_pool(in.target)));
}

Tensor gate_input(const FlagVector& flags, const Tensor& real, const Tensor& virtual_rows) {
  if (flags.size() != real.dim(0)) {
    throw ContractError(fmt::format("gate_input: {} flags for {} rows", flags.size(), real.dim(0)));
  }
  const Index have = virtual_rows.defined() ? virtual_rows.dim(0) : 0;
  if (have > flags.count()) {
    throw ContractError(
        fmt::format("gate_input: {} virtual rows for {} flagged rows", have, flags.count()));
  }
  if (have > 0) {
    Shape expected = real.shape();
    expected[0] = have;
    if (virtual_rows.shape() != expected) {
      throw ContractError(fmt::format("gate_input: virtual rows {} do not match real rows {}",
                                      to_string(virtual_rows.shape()), to_string(real.shape())));
    }
  }
  return select_rows(real, virtual_rows,
                     std::span<const bool>(flags.data(), static_cast<std::size_t>(flags.size())));
}

Tensor bce_loss(const Tensor& predictions, const std::vector<int>& labels) {
  const Index n = predictions.numel();
  if (static_cast<Index>(labels.size()) != n) {
    throw ContractError(
        fmt::format("bce_loss: {} predictions for {} labels", n, labels.size()));
  }
  if (n == 0) throw ContractError("bce_loss: empty batch");
  const double* p = predictions.value().data();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1) throw DataError(fmt::format("label at row {} is {}, not 0/1", i, y));
    const double q = std::clamp(p[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= y == 1 ? std::log(q) : std::log(1.0 - q);
  }
  Matrix value(1, 1);
  value(0, 0) = total / static_cast<double>(n);
  return OpBuilder::make({}, std::move(value), {predictions}, [predictions, labels, n](const Matrix& g) {
    const double* p = predictions.value().data();
    Matrix d = Matrix::Zero(predictions.rows(), predictions.cols());
    for (Index i = 0; i < n; ++i) {
      if (p[i] < kProbabilityClamp || p[i] > 1.0 - kProbabilityClamp) continue;
      d.data()[i] = labels[i] == 1 ? -1.0 / p[i] : 1.0 / (1.0 - p[i]);
    }
    OpBuilder::accumulate(predictions, (g(0, 0) / static_cast<double>(n)) * d);
  });
}

}  // namespace zsrec

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

#include <memory>
#include <string>
#include <vector>

#include "zsrec/dataset.hpp"
#include "zsrec/features.hpp"
#include "zsrec/nn.hpp"

namespace zsrec {

// Embedded fields of one batch as seen by a ranking model. `behavior` is the
// gated sequence: real for old users, virtual for new ones.
struct RankingInputs {
  Tensor attributes;  // n x n_a x d
  Tensor behavior;    // n x n_v x d
  Tensor context;     // n x n_c x d
  Tensor target;      // n x n_t x d
};

// Any embedding-based click model that can sit on top of the shared tables.
class RankingModel {
 public:
  virtual ~RankingModel() = default;

  virtual std::string name() const = 0;
  virtual void build(const FeatureSpec& spec, Rng& rng) = 0;
  // Click probabilities in (0, 1), shape [n].
  virtual Tensor predict(const RankingInputs& inputs, bool training, Rng& rng) = 0;
  virtual Tensor loss(const RankingInputs& inputs, const std::vector<int>& labels, bool training,
                      Rng& rng);

  virtual std::vector<Parameter> parameters() const = 0;
  virtual std::vector<Buffer> buffers() = 0;
};

struct MlpConfig {
  std::vector<Index> hidden_widths{512, 256};
  double dropout = 0.5;
  double leaky_slope = kDefaultLeakySlope;
};

// Sum-pooled fields concatenated as [behavior, attributes, context, target],
// then (Dropout -> Dense -> BN -> LeakyReLU) per hidden width and
// Dense -> Sigmoid.
class BaseDNN : public RankingModel {
 public:
  explicit BaseDNN(MlpConfig config = {}) : config_(std::move(config)) {}

  std::string name() const override { return "basednn"; }
  void build(const FeatureSpec& spec, Rng& rng) override;
  // Builds for an explicit pooled input width (4d for the standard fields).
  void build(Index input_width, Rng& rng);
  Tensor predict(const RankingInputs& inputs, bool training, Rng& rng) override;
  // The MLP alone, on an already pooled [n x input_width] input.
  Tensor forward(const Tensor& z, bool training, Rng& rng);

  std::vector<Parameter> parameters() const override;
  std::vector<Buffer> buffers() override;

  const MlpConfig& config() const { return config_; }
  Index input_width() const { return input_width_; }
  std::vector<Dense>& dense_layers() { return dense_; }
  std::vector<BatchNorm>& norm_layers() { return norms_; }
  Dense& output_layer() { return output_; }

 private:
  MlpConfig config_;
  Index input_width_ = 0;
  std::vector<Dense> dense_;
  std::vector<BatchNorm> norms_;
  Dense output_;
};

// [n x m x d] -> [n x d], summing over slots.
Tensor sum_pool(const Tensor& slots);

// The pooled ranking input z = [sum v, sum a, sum c, sum t].
Tensor pool_inputs(const RankingInputs& inputs);

// Row i is virtual[k] for the k-th row with flags(i) set, real[i] otherwise.
Tensor gate_input(const FlagVector& flags, const Tensor& real, const Tensor& virtual_rows);

// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
Tensor bce_loss(const Tensor& predictions, const std::vector<int>& labels);

inline constexpr double kProbabilityClamp = 1e-7;

}  // namespace zsrec

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

#include <optional>
#include <string>
#include <vector>

#include "zsrec/kernels.hpp"
#include "zsrec/nn.hpp"

namespace zsrec {

// Additive attention pooling over slot vectors:
//   e_i = context . tanh(slot_i * projection + bias),  alpha = softmax(e),
//   out = sum_i alpha_i * slot_i.
struct AttentionBlock {
  Tensor projection;  // d x d_r
  Tensor bias;        // d_r
  Tensor context;     // d_r x 1

  static AttentionBlock init(Index embedding_dim, Index attention_dim, Rng& rng);
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
};

// slots [n x m x d] with mask [n x m] -> [n x d]. Every row needs at least
// one unmasked slot.
Tensor attend(const Tensor& slots, const Mask& mask, const AttentionBlock& block);

// Layer settings shared by the residual encoder and decoder.
struct ResidualSettings {
  double dropout = 0.5;
  double leaky_slope = kDefaultLeakySlope;
  bool training = false;
};

// Three dense layers where the second and third also see the block input:
//   z1 = act(W1 drop(x)), z2 = act(W2 drop([z1, x])), y = f(W3 [z2, x])
// f is LeakyReLU for encoders and identity for decoders.
class ResidualBlock {
 public:
  struct Trace {
    Tensor first;         // z1
    Tensor second_input;  // [z1, x] before dropout
    Tensor second;        // z2
    Tensor last_input;    // [z2, x], the skip is the trailing x columns
    Tensor output;
  };

  ResidualBlock() = default;
  ResidualBlock(Index in, Index width1, Index width2, Index out, bool activate_output, Rng& rng);

  Trace trace(const Tensor& x, const ResidualSettings& settings, Rng& rng) const;
  Tensor operator()(const Tensor& x, const ResidualSettings& settings, Rng& rng) const {
    return trace(x, settings, rng).output;
  }
  Index in_features() const { return first_.in_features(); }
  Index out_features() const { return last_.out_features(); }
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
  std::vector<Dense*> layers() { return {&first_, &second_, &last_}; }

 private:
  Dense first_;
  Dense second_;
  Dense last_;
  bool activate_output_ = true;
};

// Which reconstruction/alignment terms train the tower.
enum class ZeroShotObjective {
  kNone,    // untrained linear attribute -> behavior map
  kSingle,  // L_a
  kDual,    // L_a + L_v
  kFull,    // L_a + L_v + L_d
};

struct TowerConfig {
  Index embedding_dim = 32;
  Index n_attributes = 6;
  Index max_seq_len = 100;
  Index attention_dim = 32;
  std::vector<Index> encoder_widths{1024, 512};
  Index hidden_dim = 512;
  std::vector<Index> decoder_widths{512, 1024};
  double dropout = 0.5;
  double leaky_slope = kDefaultLeakySlope;
  ZeroShotObjective objective = ZeroShotObjective::kFull;
};

struct ZeroShotLossReport {
  double attribute_loss = 0.0;  // L_a
  double behavior_loss = 0.0;   // L_v
  double discrepancy = 0.0;     // L_d
  double total = 0.0;           // L_zst
};

struct ZeroShotLoss {
  Tensor total;
  ZeroShotLossReport report;
};

// Embedded old-user rows fed to the tower. All tensors are constants: the
// tower never sends gradient back into the embedding tables.
struct ZeroShotInputs {
  Tensor attributes;  // n x n_a x d
  Tensor behavior;    // n x n_v x d
  Mask behavior_mask;
};

struct HiddenFeatures {
  Tensor attribute_features;  // h^a
  Tensor behavior_features;   // h^v (undefined for new users)
  Tensor attribute_code;      // p
  Tensor behavior_code;       // q (undefined for new users)
  Tensor virtual_behavior;    // flattened v-hat
};

class ZeroShotTower {
 public:
  ZeroShotTower() = default;
  ZeroShotTower(const TowerConfig& config, Rng& rng);

  const TowerConfig& config() const { return config_; }
  Index attribute_width() const { return config_.n_attributes * config_.embedding_dim; }
  Index behavior_width() const { return config_.max_seq_len * config_.embedding_dim; }

  const AttentionBlock& attribute_attention() const { return attribute_attention_; }
  const AttentionBlock& behavior_attention() const { return behavior_attention_; }
  const ResidualBlock& attribute_encoder() const { return encoder_a_; }
  const ResidualBlock& behavior_encoder() const { return encoder_v_; }
  const ResidualBlock& attribute_decoder() const { return decoder_a_; }
  const ResidualBlock& behavior_decoder() const { return decoder_v_; }
  ResidualBlock& attribute_encoder() { return encoder_a_; }
  ResidualBlock& behavior_decoder() { return decoder_v_; }
  ResidualBlock& attribute_decoder() { return decoder_a_; }
  const std::optional<Dense>& linear_map() const { return linear_map_; }

  ResidualSettings settings(bool training) const {
    return {config_.dropout, config_.leaky_slope, training};
  }

  std::vector<Parameter> parameters() const;

 private:
  TowerConfig config_;
  AttentionBlock attribute_attention_;
  AttentionBlock behavior_attention_;
  ResidualBlock encoder_a_;  // E1
  ResidualBlock encoder_v_;  // E2
  ResidualBlock decoder_a_;  // D1
  ResidualBlock decoder_v_;  // D2
  std::optional<Dense> linear_map_;
};

// Biased squared MMD with a Gaussian kernel and 1/n^2 weights on all three
// kernel sums. P and Q are [n x d_h].
Tensor mmd(const Tensor& p, const Tensor& q, double sigma = 1.0);

struct CrossModalLosses {
  Tensor attribute_loss;  // L_a
  Tensor behavior_loss;   // L_v, undefined when not requested
  Tensor attribute_code;  // P
  Tensor behavior_code;   // Q, undefined when not requested
};

// L_a = |D1(E1(h_a)) - a|^2 + |D2(E1(h_a)) - v|^2 and the mirrored L_v from
// E2(h_v), each averaged over rows. The targets are the flattened padded
// embeddings and receive no gradient.
CrossModalLosses cross_modal_losses(const Tensor& h_a, const Tensor& h_v, const Tensor& a_flat,
                                    const Tensor& v_flat, const ZeroShotTower& tower,
                                    bool with_behavior_side, bool training, Rng& rng);

// L_zst for the configured objective. Needs at least 2 rows.
ZeroShotLoss zero_shot_loss(const ZeroShotInputs& inputs, const ZeroShotTower& tower,
                            bool training, Rng& rng);

// v-hat = reshape(D2(E1(attend(a))), [n, n_v, d]) with dropout off. With the
// kNone objective the untrained linear map replaces D2(E1(.)).
Tensor generate_virtual_behavior(const Tensor& attributes, const ZeroShotTower& tower);

// Intermediate features for offline visualisation. behavior may be undefined
// (new users), in which case only the attribute side is filled in.
HiddenFeatures hidden_features(const Tensor& attributes, const Tensor& behavior,
                               const Mask& behavior_mask, const ZeroShotTower& tower);

const char* to_string(ZeroShotObjective objective);

}  // namespace zsrec

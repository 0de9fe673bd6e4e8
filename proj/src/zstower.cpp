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

#include "zsrec/zstower.hpp"

#include <fmt/format.h>

namespace zsrec {

AttentionBlock AttentionBlock::init(Index embedding_dim, Index attention_dim, Rng& rng) {
  AttentionBlock block;
  block.projection = xavier_init({embedding_dim, attention_dim}, rng);
  block.bias = Tensor::zeros({attention_dim}, true);
  block.context = xavier_init({attention_dim, 1}, rng);
  return block;
}

void AttentionBlock::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".projection", projection});
  out.push_back({prefix + ".bias", bias});
  out.push_back({prefix + ".context", context});
}

Tensor attend(const Tensor& slots, const Mask& mask, const AttentionBlock& block) {
  if (slots.rank() != 3) {
    throw ContractError(fmt::format("attend: slots must be [n, m, d], got {}",
                                    to_string(slots.shape())));
  }
  const Index n = slots.dim(0), m = slots.dim(1), d = slots.dim(2);
  if (mask.rows() != n || mask.cols() != m) {
    throw ContractError(fmt::format("attend: mask is {}x{}, slots are {}", mask.rows(),
                                    mask.cols(), to_string(slots.shape())));
  }
  if (block.projection.dim(0) != d) {
    throw ContractError(fmt::format("attend: projection expects width {}, slots have {}",
                                    block.projection.dim(0), d));
  }
  Tensor flat = reshape(slots, {n * m, d});
  Tensor hidden = tanh(linear(flat, block.projection, block.bias));
  Tensor scores = reshape(matmul(hidden, block.context), {n, m});
  Tensor weights = softmax(scores, mask);
  return weighted_sum_slots(weights, slots);
}

ResidualBlock::ResidualBlock(Index in, Index width1, Index width2, Index out,
                             bool activate_output, Rng& rng)
    : first_(Dense::init(in, width1, rng)),
      second_(Dense::init(width1 + in, width2, rng)),
      last_(Dense::init(width2 + in, out, rng)),
      activate_output_(activate_output) {}

ResidualBlock::Trace ResidualBlock::trace(const Tensor& x, const ResidualSettings& settings,
                                          Rng& rng) const {
  const double rate = settings.dropout;
  Trace t;
  t.first = leaky_relu(first_(dropout(x, rate, settings.training, rng)), settings.leaky_slope);
  t.second_input = concat_cols(t.first, x);
  t.second = leaky_relu(second_(dropout(t.second_input, rate, settings.training, rng)),
                        settings.leaky_slope);
  t.last_input = concat_cols(t.second, x);
  Tensor pre = last_(t.last_input);
  t.output = activate_output_ ? leaky_relu(pre, settings.leaky_slope) : pre;
  return t;
}

void ResidualBlock::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  first_.collect(prefix + ".dense1", out);
  second_.collect(prefix + ".dense2", out);
  last_.collect(prefix + ".dense3", out);
}

namespace {

void check_tower_config(const TowerConfig& c) {
  auto positive = [](Index v, const char* what) {
    if (v <= 0) throw ConfigError(fmt::format("{} must be positive, got {}", what, v));
  };
  positive(c.embedding_dim, "embedding_dim");
  positive(c.n_attributes, "number of attribute fields");
  positive(c.max_seq_len, "max_seq_len");
  positive(c.attention_dim, "attention_dim");
  positive(c.hidden_dim, "hidden_dim");
  if (c.encoder_widths.size() != 2 || c.decoder_widths.size() != 2) {
    throw ConfigError(fmt::format("encoder and decoder need exactly 2 hidden widths, got {} and {}",
                                  c.encoder_widths.size(), c.decoder_widths.size()));
  }
  for (Index w : c.encoder_widths) positive(w, "encoder width");
  for (Index w : c.decoder_widths) positive(w, "decoder width");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) {
    throw ConfigError(fmt::format("dropout must be in [0, 1), got {}", c.dropout));
  }
}

}  // namespace

ZeroShotTower::ZeroShotTower(const TowerConfig& config, Rng& rng) : config_(config) {
  check_tower_config(config_);
  const Index d = config_.embedding_dim;
  const Index a_width = attribute_width();
  const Index v_width = behavior_width();
  const auto& e = config_.encoder_widths;
  const auto& dec = config_.decoder_widths;
  attribute_attention_ = AttentionBlock::init(d, config_.attention_dim, rng);
  behavior_attention_ = AttentionBlock::init(d, config_.attention_dim, rng);
  encoder_a_ = ResidualBlock(d, e[0], e[1], config_.hidden_dim, true, rng);
  encoder_v_ = ResidualBlock(d, e[0], e[1], config_.hidden_dim, true, rng);
  decoder_a_ = ResidualBlock(config_.hidden_dim, dec[0], dec[1], a_width, false, rng);
  decoder_v_ = ResidualBlock(config_.hidden_dim, dec[0], dec[1], v_width, false, rng);
  if (config_.objective == ZeroShotObjective::kNone) {
    linear_map_ = Dense::init(d, v_width, rng);
  }
}

std::vector<Parameter> ZeroShotTower::parameters() const {
  std::vector<Parameter> out;
  attribute_attention_.collect("zst.attention_a", out);
  behavior_attention_.collect("zst.attention_v", out);
  encoder_a_.collect("zst.encoder_a", out);
  encoder_v_.collect("zst.encoder_v", out);
  decoder_a_.collect("zst.decoder_a", out);
  decoder_v_.collect("zst.decoder_v", out);
  if (linear_map_) linear_map_->collect("zst.linear_map", out);
  return out;
}

Tensor mmd(const Tensor& p, const Tensor& q, double sigma) {
  if (p.rank() != 2 || q.rank() != 2 || p.cols() != q.cols()) {
    throw ContractError(fmt::format("mmd: need [n x k] inputs of equal width, got {} and {}",
                                    to_string(p.shape()), to_string(q.shape())));
  }
  if (p.rows() == 0 || q.rows() == 0) throw ContractError("mmd: empty input");
  if (!(sigma > 0.0)) throw ContractError(fmt::format("mmd: sigma must be positive, got {}", sigma));
  const Matrix& pv = p.value();
  const Matrix& qv = q.value();
  const double n = static_cast<double>(pv.rows());
  const double m = static_cast<double>(qv.rows());
  const double a = 1.0 / (n * n), b = 1.0 / (m * m), c = 1.0 / (n * m);
  Matrix kpp = gaussian_kernel(pv, pv, sigma);
  Matrix kqq = gaussian_kernel(qv, qv, sigma);
  Matrix kpq = gaussian_kernel(pv, qv, sigma);
  Matrix value(1, 1);
  value(0, 0) = a * kpp.sum() + b * kqq.sum() - 2.0 * c * kpq.sum();
  const double s2 = sigma * sigma;
  return OpBuilder::make(
      {}, std::move(value), {p, q},
      [p, q, pv, qv, kpp = std::move(kpp), kqq = std::move(kqq), kpq = std::move(kpq), a, b, c,
       s2](const Matrix& g) {
        const double up = g(0, 0);
        if (OpBuilder::needs_grad(p)) {
          Matrix gp = (-2.0 * a / s2) *
                          (kpp.rowwise().sum().asDiagonal() * pv - kpp * pv) +
                      (2.0 * c / s2) * (kpq.rowwise().sum().asDiagonal() * pv - kpq * qv);
          OpBuilder::accumulate(p, up * gp);
        }
        if (OpBuilder::needs_grad(q)) {
          Matrix gq = (-2.0 * b / s2) *
                          (kqq.rowwise().sum().asDiagonal() * qv - kqq * qv) +
                      (2.0 * c / s2) *
                          (kpq.colwise().sum().transpose().asDiagonal() * qv -
                           kpq.transpose() * pv);
          OpBuilder::accumulate(q, up * gq);
        }
      });
}

CrossModalLosses cross_modal_losses(const Tensor& h_a, const Tensor& h_v, const Tensor& a_flat,
                                    const Tensor& v_flat, const ZeroShotTower& tower,
                                    bool with_behavior_side, bool training, Rng& rng) {
  const ResidualSettings s = tower.settings(training);
  CrossModalLosses out;
  out.attribute_code = tower.attribute_encoder()(h_a, s, rng);
  out.attribute_loss =
      add(squared_error(tower.attribute_decoder()(out.attribute_code, s, rng), a_flat),
          squared_error(tower.behavior_decoder()(out.attribute_code, s, rng), v_flat));
  if (with_behavior_side) {
    out.behavior_code = tower.behavior_encoder()(h_v, s, rng);
    out.behavior_loss =
        add(squared_error(tower.attribute_decoder()(out.behavior_code, s, rng), a_flat),
            squared_error(tower.behavior_decoder()(out.behavior_code, s, rng), v_flat));
  }
  return out;
}

namespace {

Mask all_slots(Index n, Index m) { return Mask::Constant(n, m, true); }

}  // namespace

ZeroShotLoss zero_shot_loss(const ZeroShotInputs& inputs, const ZeroShotTower& tower,
                            bool training, Rng& rng) {
  const TowerConfig& c = tower.config();
  if (c.objective == ZeroShotObjective::kNone) {
    throw ContractError("zero_shot_loss: the untrained linear map has no loss");
  }
  const Index n = inputs.attributes.dim(0);
  if (n < 2) throw ContractError(fmt::format("zero_shot_loss: need at least 2 rows, got {}", n));
  if (inputs.behavior.dim(0) != n) {
    throw ContractError(fmt::format("zero_shot_loss: {} attribute rows vs {} behavior rows", n,
                                    inputs.behavior.dim(0)));
  }
  const bool behavior_side = c.objective != ZeroShotObjective::kSingle;
  Tensor a = inputs.attributes.detach();
  Tensor v = inputs.behavior.detach();
  Tensor h_a = attend(a, all_slots(n, c.n_attributes), tower.attribute_attention());
  Tensor h_v;
  if (behavior_side) h_v = attend(v, inputs.behavior_mask, tower.behavior_attention());
  Tensor a_flat = reshape(a, {n, tower.attribute_width()});
  Tensor v_flat = reshape(v, {n, tower.behavior_width()});
  CrossModalLosses parts =
      cross_modal_losses(h_a, h_v, a_flat, v_flat, tower, behavior_side, training, rng);

  ZeroShotLoss out;
  out.report.attribute_loss = parts.attribute_loss.item();
  out.total = parts.attribute_loss;
  if (behavior_side) {
    out.report.behavior_loss = parts.behavior_loss.item();
    out.total = add(out.total, parts.behavior_loss);
  }
  if (c.objective == ZeroShotObjective::kFull) {
    Tensor d = mmd(parts.attribute_code, parts.behavior_code);
    out.report.discrepancy = d.item();
    out.total = add(out.total, d);
  }
  out.report.total = out.total.item();
  return out;
}

Tensor generate_virtual_behavior(const Tensor& attributes, const ZeroShotTower& tower) {
  const TowerConfig& c = tower.config();
  const Index n = attributes.dim(0);
  Tensor a = attributes.detach();
  Tensor h_a = attend(a, all_slots(n, c.n_attributes), tower.attribute_attention());
  Tensor flat;
  if (tower.linear_map()) {
    flat = (*tower.linear_map())(h_a);
  } else {
    Rng unused(0);
    const ResidualSettings s = tower.settings(false);
    flat = tower.behavior_decoder()(tower.attribute_encoder()(h_a, s, unused), s, unused);
  }
  return reshape(flat, {n, c.max_seq_len, c.embedding_dim});
}

HiddenFeatures hidden_features(const Tensor& attributes, const Tensor& behavior,
                               const Mask& behavior_mask, const ZeroShotTower& tower) {
  const TowerConfig& c = tower.config();
  const Index n = attributes.dim(0);
  Rng unused(0);
  const ResidualSettings s = tower.settings(false);
  HiddenFeatures out;
  out.attribute_features =
      attend(attributes.detach(), all_slots(n, c.n_attributes), tower.attribute_attention())
          .detach();
  out.attribute_code = tower.attribute_encoder()(out.attribute_features, s, unused).detach();
  out.virtual_behavior =
      reshape(generate_virtual_behavior(attributes, tower), {n, tower.behavior_width()}).detach();
  if (behavior.defined()) {
    out.behavior_features =
        attend(behavior.detach(), behavior_mask, tower.behavior_attention()).detach();
    out.behavior_code = tower.behavior_encoder()(out.behavior_features, s, unused).detach();
  }
  return out;
}

const char* to_string(ZeroShotObjective objective) {
  switch (objective) {
    case ZeroShotObjective::kNone: return "none";
    case ZeroShotObjective::kSingle: return "single";
    case ZeroShotObjective::kDual: return "dual";
    case ZeroShotObjective::kFull: return "full";
  }
  return "?";
}

}  // namespace zsrec

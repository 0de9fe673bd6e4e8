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

#include "zsrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace zsrec {

namespace {

constexpr const char* kParamPrefix = "param/";
constexpr const char* kBufferPrefix = "buffer/";
constexpr Index kHistoryColumns = 10;

MlpConfig mlp_config(const ModelConfig& model) {
  MlpConfig c;
  c.hidden_widths = model.mlp_widths;
  c.dropout = model.dropout;
  c.leaky_slope = model.leaky_slope;
  return c;
}


void put(Checkpoint& ckpt, const std::string& name, const Shape& shape, const Matrix& values) {
  ckpt.tensors.push_back({name, shape, values});
}

void put_scalar(Checkpoint& ckpt, const std::string& name, double v) {
  put(ckpt, name, {}, Matrix::Constant(1, 1, v));
}

const TensorRecord& require(const Checkpoint& ckpt, const std::string& name, Index rows,
                            Index cols) {
  const TensorRecord* r = ckpt.find(name);
  if (r == nullptr) throw DataError(fmt::format("checkpoint: missing record '{}'", name));
  if (r->values.rows() != rows || r->values.cols() != cols) {
    throw DataError(fmt::format("checkpoint: record '{}' is {}x{}, model expects {}x{}", name,
                                r->values.rows(), r->values.cols(), rows, cols));
  }
  return *r;
}

double require_scalar(const Checkpoint& ckpt, const std::string& name) {
  return require(ckpt, name, 1, 1).values(0, 0);
}

const std::string& require_text(const Checkpoint& ckpt, const std::string& name) {
  auto it = ckpt.text.find(name);
  if (it == ckpt.text.end()) throw DataError(fmt::format("checkpoint: missing text '{}'", name));
  return it->second;
}

void save_optimizer(Checkpoint& ckpt, const std::string& prefix, const Adam& opt) {
  const AdamState& s = opt.state();
  put_scalar(ckpt, prefix + ".step", static_cast<double>(s.step));
  for (std::size_t i = 0; i < opt.parameters().size(); ++i) {
    const Parameter& p = opt.parameters()[i];
    put(ckpt, prefix + ".m/" + p.name, p.tensor.shape(), s.first_moment[i]);
    put(ckpt, prefix + ".v/" + p.name, p.tensor.shape(), s.second_moment[i]);
  }
}

void load_optimizer(const Checkpoint& ckpt, const std::string& prefix, Adam& opt) {
  AdamState& s = opt.state();
  s.step = static_cast<std::int64_t>(require_scalar(ckpt, prefix + ".step"));
  for (std::size_t i = 0; i < opt.parameters().size(); ++i) {
    const Parameter& p = opt.parameters()[i];
    const Index r = p.tensor.rows();
    const Index c = p.tensor.cols();
    s.first_moment[i] = require(ckpt, prefix + ".m/" + p.name, r, c).values;
    s.second_moment[i] = require(ckpt, prefix + ".v/" + p.name, r, c).values;
  }
}

std::string format_loss(double v) { return fmt::format("{:.9g}", v); }

}  // namespace

ZeroShotObjective objective_for(Variant v) {
  switch (v) {
    case Variant::kNone: return ZeroShotObjective::kNone;
    case Variant::kSingle: return ZeroShotObjective::kSingle;
    case Variant::kDual: return ZeroShotObjective::kDual;
    case Variant::kBase: return ZeroShotObjective::kFull;
    case Variant::kBaseDnn: break;
  }
  throw ContractError("basednn has no zero-shot tower");
}

TowerConfig tower_config(const ModelConfig& model, Index n_attributes, Variant variant) {
  TowerConfig c;
  c.embedding_dim = model.embedding_dim;
  c.n_attributes = n_attributes;
  c.max_seq_len = model.max_seq_len;
  c.attention_dim = model.attention_dim > 0 ? model.attention_dim : model.embedding_dim;
  c.encoder_widths = model.encoder_widths;
  c.hidden_dim = model.hidden_dim;
  c.decoder_widths = model.decoder_widths;
  c.dropout = model.dropout;
  c.leaky_slope = model.leaky_slope;
  c.objective = objective_for(variant);
  return c;
}

// ---------------------------------------------------------------------------
// MailModel

MailModel::MailModel(const Config& config, const FeatureSpec& spec)
    : config_(config), spec_(spec), ranker_(mlp_config(config.model)) {
  if (spec.embedding_dim != config.model.embedding_dim ||
      spec.max_seq_len != config.model.max_seq_len) {
    throw ConfigError(fmt::format(
        "model expects embedding_dim={} max_seq_len={}, data was encoded with {} and {}",
        config.model.embedding_dim, config.model.max_seq_len, spec.embedding_dim,
        spec.max_seq_len));
  }
  Rng init(derive_seed(config.train.seed, "init"));
  tables_ = EmbeddingTables(spec, init);
  ranker_.build(spec, init);
  if (variant() != Variant::kBaseDnn) {
    Rng tower_init(derive_seed(config.train.seed, "zst_init"));
    tower_.emplace(tower_config(config.model, spec.n_attributes(), variant()), tower_init);
  }
  std::set<const detail::Node*> tower_nodes;
  for (const Parameter& p : tower_parameters()) tower_nodes.insert(p.tensor.node());
  for (const Parameter& p : ranking_parameters()) {
    if (tower_nodes.count(p.tensor.node()) != 0) {
      throw ContractError("parameter '" + p.name + "' is shared by both optimizers");
    }
  }
}

std::vector<Parameter> MailModel::tower_parameters() const {
  return tower_ ? tower_->parameters() : std::vector<Parameter>{};
}

std::vector<Parameter> MailModel::ranking_parameters() const {
  std::vector<Parameter> out = tables_.parameters();
  for (Parameter& p : ranker_.parameters()) out.push_back(std::move(p));
  return out;
}

std::vector<Buffer> MailModel::buffers() { return ranker_.buffers(); }

Tensor MailModel::virtual_behavior(const FeatureBatch& batch) const {
  if (!tower_) return {};
  const std::vector<Index> rows = batch.rows_where(true);
  if (rows.empty()) return {};
  const FeatureBatch fresh = batch.select(rows);
  return generate_virtual_behavior(embed_attributes(fresh, tables_, false), *tower_);
}

RankingInputs MailModel::ranking_inputs(const FeatureBatch& batch, bool track_grad,
                                        bool detach_virtual) {
  RankingInputs in;
  in.attributes = embed_attributes(batch, tables_, track_grad);
  in.context = embed_context(batch, tables_, track_grad);
  in.target = embed_target(batch, tables_, track_grad);
  Tensor real = embed_behavior(batch, tables_, track_grad);
  Tensor virt = virtual_behavior(batch);
  if (!virt.defined()) {
    // No tower (BaseDNN) or no new users: everyone keeps the real sequence.
    in.behavior = real;
    return in;
  }
  if (detach_virtual || !track_grad) virt = virt.detach();
  in.behavior = gate_input(batch.flags, real, virt);
  return in;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const Config& config, const Dataset& data)
    : config_(config),
      data_(data),
      model_(config, data.spec),
      tower_opt_(model_.tower_parameters(), config.train.learning_rate, config.train.beta1,
                 config.train.beta2, config.train.epsilon),
      ranking_opt_(model_.ranking_parameters(), config.train.learning_rate, config.train.beta1,
                   config.train.beta2, config.train.epsilon),
      zero_shot_rng_(derive_seed(config.train.seed, "zst")),
      ranking_rng_(derive_seed(config.train.seed, "rank")) {
  config_.validate();
}

std::vector<std::vector<Index>> Trainer::epoch_batches(std::int32_t epoch) const {
  const Index n = data_.train.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(config_.train.seed + static_cast<std::uint64_t>(epoch), "shuffle"));
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }
  std::vector<std::vector<Index>> batches;
  const Index size = config_.train.batch_size;
  for (Index start = 0; start < n; start += size) {
    const Index end = std::min(n, start + size);
    if (end - start < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), order.begin() + start, order.begin() + end);
    } else {
      batches.emplace_back(order.begin() + start, order.begin() + end);
    }
  }
  return batches;
}

void Trainer::check_finite(double value, const char* what) const {
  if (std::isfinite(value)) return;
  const std::string last =
      last_checkpoint_.empty() ? std::string("none") : last_checkpoint_.string();
  throw NumericError(fmt::format("non-finite {} at epoch {} batch {}; last good checkpoint: {}",
                                 what, epoch_ + 1, batch_, last));
}

bool Trainer::zero_shot_step(const FeatureBatch& batch, BatchReport& report) {
  const Variant v = config_.train.variant;
  if (v == Variant::kBaseDnn || v == Variant::kNone) return false;
  const std::vector<Index> rows = batch.rows_where(false);
  if (rows.size() < 2) {
    ++skipped_zero_shot_;
    return false;
  }
  const FeatureBatch old = batch.select(rows);
  const EmbeddingTables& tables = model_.tables();
  ZeroShotInputs inputs{embed_attributes(old, tables, false), embed_behavior(old, tables, false),
                        old.behavior_mask};
  tower_opt_.zero_grad();
  ZeroShotLoss loss = zero_shot_loss(inputs, model_.tower(), true, zero_shot_rng_);
  check_finite(loss.report.total, "L_zst");
  backward(loss.total);
  tower_opt_.step();
  report.zero_shot = loss.report;
  report.zero_shot_step = true;
  return true;
}

BatchReport Trainer::step(const FeatureBatch& batch) {
  BatchReport report;
  report.epoch = epoch_ + 1;
  report.batch = ++batch_;
  report.rows = batch.size();
  report.new_rows = batch.count_new();

  zero_shot_step(batch, report);

  const bool detach = config_.train.detach_virtual;
  ranking_opt_.zero_grad();
  if (!detach) tower_opt_.zero_grad();
  RankingInputs inputs = model_.ranking_inputs(batch, true, detach);
  Tensor loss = model_.ranker().loss(inputs, batch.labels, true, ranking_rng_);
  report.ranking_loss = loss.item();
  check_finite(report.ranking_loss, "L_rt");
  backward(loss);
  ranking_opt_.step();
  const Variant v = config_.train.variant;
  if (!detach && v != Variant::kNone && v != Variant::kBaseDnn) tower_opt_.step();

  history_.push_back(report);
  return report;
}

std::vector<BatchReport> Trainer::train_epoch() {
  std::vector<BatchReport> reports;
  for (const std::vector<Index>& rows : epoch_batches(epoch_)) {
    const FeatureBatch batch = assemble_batch(data_, data_.train, rows);
    reports.push_back(step(batch));
  }
  ++epoch_;
  return reports;
}

void Trainer::train(const std::filesystem::path& out_dir) {
  while (epoch_ < config_.train.epochs) {
    const std::vector<BatchReport> reports = train_epoch();
    double rt = 0.0;
    for (const BatchReport& r : reports) rt += r.ranking_loss;
    spdlog::info("epoch {}/{}: {} batches, mean L_rt {:.5f}", epoch_, config_.train.epochs,
                 reports.size(), reports.empty() ? 0.0 : rt / static_cast<double>(reports.size()));
    if (!out_dir.empty()) {
      const std::filesystem::path path = out_dir / "last.ckpt";
      save_checkpoint(checkpoint(), path);
      last_checkpoint_ = path;
    }
  }
  if (skipped_zero_shot_ > 0) {
    spdlog::warn("{} batches had fewer than 2 old users; zero-shot step skipped",
                 skipped_zero_shot_);
  }
  if (!out_dir.empty()) {
    save_checkpoint(checkpoint(), out_dir / "model.ckpt");
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.text["config"] = to_ini(config_);
  ckpt.text["variant"] = to_string(config_.train.variant);
  ckpt.text["rng.zero_shot"] = zero_shot_rng_.state();
  ckpt.text["rng.ranking"] = ranking_rng_.state();
  for (const Parameter& p : model_.tower_parameters()) {
    put(ckpt, kParamPrefix + p.name, p.tensor.shape(), p.tensor.value());
  }
  for (const Parameter& p : model_.ranking_parameters()) {
    put(ckpt, kParamPrefix + p.name, p.tensor.shape(), p.tensor.value());
  }
  for (const Buffer& b : const_cast<MailModel&>(model_).buffers()) {
    put(ckpt, kBufferPrefix + b.name, {1, b.values->cols()}, *b.values);
  }
  save_optimizer(ckpt, "adam_a", tower_opt_);
  save_optimizer(ckpt, "adam_b", ranking_opt_);
  put_scalar(ckpt, "state.epoch", epoch_);
  put_scalar(ckpt, "state.batch", static_cast<double>(batch_));
  put_scalar(ckpt, "state.skipped", static_cast<double>(skipped_zero_shot_));
  Matrix h(static_cast<Index>(history_.size()), kHistoryColumns);
  for (std::size_t i = 0; i < history_.size(); ++i) {
    const BatchReport& r = history_[i];
    h.row(static_cast<Index>(i)) << r.epoch, static_cast<double>(r.batch),
        static_cast<double>(r.rows), static_cast<double>(r.new_rows), r.zero_shot_step ? 1 : 0,
        r.zero_shot.attribute_loss, r.zero_shot.behavior_loss, r.zero_shot.discrepancy,
        r.zero_shot.total, r.ranking_loss;
  }
  put(ckpt, "state.history", {h.rows(), kHistoryColumns}, h);
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  const std::string& variant = require_text(ckpt, "variant");
  if (variant != to_string(config_.train.variant)) {
    throw DataError(fmt::format("checkpoint is for variant '{}', trainer runs '{}'", variant,
                                to_string(config_.train.variant)));
  }
  restore_model(model_, ckpt);
  load_optimizer(ckpt, "adam_a", tower_opt_);
  load_optimizer(ckpt, "adam_b", ranking_opt_);
  if (!zero_shot_rng_.set_state(require_text(ckpt, "rng.zero_shot")) ||
      !ranking_rng_.set_state(require_text(ckpt, "rng.ranking"))) {
    throw DataError("checkpoint: malformed RNG state");
  }
  epoch_ = static_cast<std::int32_t>(require_scalar(ckpt, "state.epoch"));
  batch_ = static_cast<std::int64_t>(require_scalar(ckpt, "state.batch"));
  skipped_zero_shot_ = static_cast<std::int64_t>(require_scalar(ckpt, "state.skipped"));
  const TensorRecord* h = ckpt.find("state.history");
  if (h == nullptr || h->values.cols() != kHistoryColumns) {
    throw DataError("checkpoint: missing or malformed 'state.history'");
  }
  history_.clear();
  for (Index i = 0; i < h->values.rows(); ++i) {
    const auto row = h->values.row(i);
    BatchReport r;
    r.epoch = static_cast<std::int32_t>(row(0));
    r.batch = static_cast<std::int64_t>(row(1));
    r.rows = static_cast<Index>(row(2));
    r.new_rows = static_cast<Index>(row(3));
    r.zero_shot_step = row(4) != 0.0;
    r.zero_shot = {row(5), row(6), row(7), row(8)};
    r.ranking_loss = row(9);
    history_.push_back(r);
  }
}

void restore_model(MailModel& model, const Checkpoint& ckpt) {
  std::vector<Parameter> params = model.tower_parameters();
  for (Parameter& p : model.ranking_parameters()) params.push_back(std::move(p));
  for (Parameter& p : params) {
    const TensorRecord& r =
        require(ckpt, kParamPrefix + p.name, p.tensor.rows(), p.tensor.cols());
    p.tensor.mutable_value() = r.values;
  }
  for (const Buffer& b : model.buffers()) {
    *b.values = require(ckpt, kBufferPrefix + b.name, 1, b.values->cols()).values;
  }
}

std::unique_ptr<MailModel> load_model(const Checkpoint& ckpt, const FeatureSpec& spec) {
  Config config = parse_config(require_text(ckpt, "config"), "checkpoint");
  auto model = std::make_unique<MailModel>(config, spec);
  restore_model(*model, ckpt);
  return model;
}

ScoredRows score_impressions(MailModel& model, const Dataset& data, const ImpressionTable& table,
                             Index batch_size) {
  if (batch_size < 1) throw ConfigError("scoring batch size must be positive");
  ScoredRows out;
  const Index n = table.size();
  out.scores.reserve(static_cast<std::size_t>(n));
  Rng unused(0);
  std::vector<Index> rows;
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(n, start + batch_size);
    rows.resize(static_cast<std::size_t>(end - start));
    std::iota(rows.begin(), rows.end(), start);
    const FeatureBatch batch = assemble_batch(data, table, rows);
    const RankingInputs inputs = model.ranking_inputs(batch, false, true);
    const Tensor pred = model.ranker().predict(inputs, false, unused);
    for (Index i = 0; i < batch.size(); ++i) {
      out.scores.push_back(pred.value()(i, 0));
      out.flags.push_back(batch.flags(i));
      out.labels.push_back(batch.labels[static_cast<std::size_t>(i)]);
      out.users.push_back(batch.users[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

std::string history_csv(const std::vector<BatchReport>& history) {
  std::string out = "batch,L_a,L_v,L_d,L_zst,L_rt\n";
  for (const BatchReport& r : history) {
    if (r.zero_shot_step) {
      out += fmt::format("{},{},{},{},{},{}\n", r.batch, format_loss(r.zero_shot.attribute_loss),
                         format_loss(r.zero_shot.behavior_loss),
                         format_loss(r.zero_shot.discrepancy), format_loss(r.zero_shot.total),
                         format_loss(r.ranking_loss));
    } else {
      out += fmt::format("{},NA,NA,NA,NA,{}\n", r.batch, format_loss(r.ranking_loss));
    }
  }
  return out;
}

}  // namespace zsrec

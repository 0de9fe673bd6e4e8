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
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "zsrec/checkpoint.hpp"
#include "zsrec/config.hpp"
#include "zsrec/features.hpp"
#include "zsrec/ranktower.hpp"
#include "zsrec/zstower.hpp"

namespace zsrec {

ZeroShotObjective objective_for(Variant v);
TowerConfig tower_config(const ModelConfig& model, Index n_attributes, Variant variant);

// Embedding tables, the zero-shot tower (absent for BaseDNN) and the ranking
// tower. Initialisation streams are separate so every variant starts from
// the same tables and ranking weights for a given seed.
class MailModel {
 public:
  MailModel(const Config& config, const FeatureSpec& spec);

  const Config& config() const { return config_; }
  const FeatureSpec& spec() const { return spec_; }
  Variant variant() const { return config_.train.variant; }
  bool has_tower() const { return tower_.has_value(); }

  EmbeddingTables& tables() { return tables_; }
  const EmbeddingTables& tables() const { return tables_; }
  ZeroShotTower& tower() { return *tower_; }
  const ZeroShotTower& tower() const { return *tower_; }
  BaseDNN& ranker() { return ranker_; }

  std::vector<Parameter> tower_parameters() const;
  // Embedding tables plus ranking tower.
  std::vector<Parameter> ranking_parameters() const;
  std::vector<Buffer> buffers();

  // Virtual behavior for the flagged rows of `batch`, in row order, or an
  // undefined tensor when there are none or the variant has no tower.
  Tensor virtual_behavior(const FeatureBatch& batch) const;

  // Embedded inputs with behavior gated by flag. With track_grad=false the
  // lookups are constants.
  RankingInputs ranking_inputs(const FeatureBatch& batch, bool track_grad, bool detach_virtual);

 private:
  Config config_;
  FeatureSpec spec_;
  EmbeddingTables tables_;
  std::optional<ZeroShotTower> tower_;
  BaseDNN ranker_;
};

struct BatchReport {
  std::int32_t epoch = 0;
  std::int64_t batch = 0;  // global batch counter, from 1
  Index rows = 0;
  Index new_rows = 0;
  bool zero_shot_step = false;
  ZeroShotLossReport zero_shot;
  double ranking_loss = 0.0;
};

// Algorithm-level training loop: per batch, a zero-shot step on the old
// users (optimizer G_A), then virtual behavior for the new users, then a
// ranking step on every row (optimizer G_B).
class Trainer {
 public:
  Trainer(const Config& config, const Dataset& data);

  MailModel& model() { return model_; }
  const Dataset& data() const { return data_; }
  Adam& tower_optimizer() { return tower_opt_; }
  Adam& ranking_optimizer() { return ranking_opt_; }
  std::int32_t epoch() const { return epoch_; }
  std::int64_t batches_seen() const { return batch_; }
  std::int64_t skipped_zero_shot() const { return skipped_zero_shot_; }
  const std::vector<BatchReport>& history() const { return history_; }

  // Training rows of an epoch in visiting order, cut into batches. A last
  // batch with fewer than 2 rows joins the one before it.
  std::vector<std::vector<Index>> epoch_batches(std::int32_t epoch) const;

  // One full step on an assembled batch.
  BatchReport step(const FeatureBatch& batch);
  // Only the zero-shot half of a step; returns false when skipped.
  bool zero_shot_step(const FeatureBatch& batch, BatchReport& report);

  // Runs the next epoch and returns its batch reports.
  std::vector<BatchReport> train_epoch();
  // Remaining epochs up to config.train.epochs. With a directory, writes
  // last.ckpt after each epoch and model.ckpt plus history.csv at the end.
  void train(const std::filesystem::path& out_dir = {});

  Checkpoint checkpoint() const;
  // Restores parameters, optimizer moments, buffers, counters and RNG
  // streams. Throws DataError when the checkpoint does not fit this model.
  void restore(const Checkpoint& ckpt);

  void set_last_checkpoint(std::filesystem::path p) { last_checkpoint_ = std::move(p); }

 private:
  void check_finite(double value, const char* what) const;

  Config config_;
  const Dataset& data_;
  MailModel model_;
  Adam tower_opt_;
  Adam ranking_opt_;
  Rng zero_shot_rng_;
  Rng ranking_rng_;
  std::int32_t epoch_ = 0;
  std::int64_t batch_ = 0;
  std::int64_t skipped_zero_shot_ = 0;
  std::vector<BatchReport> history_;
  std::filesystem::path last_checkpoint_;
};

// Scores for every row of `table`, in row order, with dropout off and
// batch-norm running statistics.
struct ScoredRows {
  std::vector<double> scores;
  std::vector<bool> flags;
  std::vector<int> labels;
  std::vector<std::int32_t> users;
};
ScoredRows score_impressions(MailModel& model, const Dataset& data, const ImpressionTable& table,
                             Index batch_size);

// Model rebuilt from a checkpoint's own config and parameters.
std::unique_ptr<MailModel> load_model(const Checkpoint& ckpt, const FeatureSpec& spec);

// Fills model parameters and buffers from the checkpoint. Throws DataError
// on a missing or misshapen record.
void restore_model(MailModel& model, const Checkpoint& ckpt);

// Columns batch,L_a,L_v,L_d,L_zst,L_rt.
std::string history_csv(const std::vector<BatchReport>& history);

}  // namespace zsrec

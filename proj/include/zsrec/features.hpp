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
#include <span>
#include <string>
#include <vector>

#include "zsrec/dataset.hpp"
#include "zsrec/nn.hpp"

namespace zsrec {

using FlagVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

// One minibatch of impressions with everything both towers consume.
struct FeatureBatch {
  IdMatrix attributes;        // n x n_a
  IdMatrix behavior_items;    // n x n_v, right-padded with 0
  IdMatrix behavior_actions;  // n x n_v
  Mask behavior_mask;         // true where behavior_items != 0
  IdMatrix context;           // n x n_c
  IdMatrix target;            // n x n_t
  std::vector<int> labels;
  FlagVector flags;           // true for rows with no behavior (new users)
  std::vector<std::int32_t> users;

  Index size() const { return attributes.rows(); }
  Index count_new() const { return flags.count(); }
  std::vector<Index> rows_where(bool flag) const;
  FeatureBatch select(std::span<const Index> rows) const;
};

enum class BehaviorSource {
  kObserved,  // the behavior the model is allowed to see
  kWithheld,  // ground truth of masked users (evaluation only)
};

// Builds a batch for the given impression rows. Sequences keep their most
// recent max_seq_len events, left-aligned.
FeatureBatch assemble_batch(const Dataset& data, const ImpressionTable& impressions,
                            std::span<const Index> rows,
                            BehaviorSource source = BehaviorSource::kObserved);

// One row per user with the user-side fields filled in; context and target
// are padding and labels are 0.
FeatureBatch assemble_users(const Dataset& data, std::span<const std::int32_t> users,
                            BehaviorSource source = BehaviorSource::kObserved);

// True iff no behavior slot in the row is real.
bool compute_flag(const Eigen::Ref<const Eigen::Array<bool, 1, Eigen::Dynamic>>& mask_row);

// One (vocab x d) table per feature family. Row 0 is the padding vector: zero
// at construction and excluded from optimizer updates.
class EmbeddingTables {
 public:
  EmbeddingTables() = default;
  EmbeddingTables(const FeatureSpec& spec, Rng& rng);

  Index dim() const { return dim_; }
  const std::vector<Tensor>& attributes() const { return attributes_; }
  const Tensor& item() const { return item_; }
  const Tensor& action() const { return action_; }
  const std::vector<Tensor>& context() const { return context_; }
  // target()[0] is the item table itself.
  std::vector<Tensor> target() const;

  std::vector<Parameter> parameters() const;
  // Lookups whose ID fell outside a table and were served from the padding row.
  std::int64_t out_of_vocabulary() const { return oov_; }

 private:
  friend Tensor embed_attributes(const FeatureBatch&, const EmbeddingTables&, bool);
  friend Tensor embed_behavior(const FeatureBatch&, const EmbeddingTables&, bool);
  friend Tensor embed_context(const FeatureBatch&, const EmbeddingTables&, bool);
  friend Tensor embed_target(const FeatureBatch&, const EmbeddingTables&, bool);

  Index dim_ = 0;
  std::vector<Tensor> attributes_;
  Tensor item_;
  Tensor action_;
  std::vector<Tensor> context_;
  std::vector<Tensor> target_extra_;
  mutable std::int64_t oov_ = 0;
};

// Field j of each row looked up in tables[j]: [n x F] ids -> [n x F x d].
// Gradients scatter back into the tables, never into row 0. Out-of-range IDs
// are served from row 0 and counted in `oov`.
Tensor lookup_fields(std::span<const Tensor> tables, const IdMatrix& ids, std::int64_t& oov);

// With track_grad=false the result is a constant, cut off from the tables.
Tensor embed_attributes(const FeatureBatch& batch, const EmbeddingTables& tables,
                        bool track_grad = true);
// Slot = item embedding * action embedding (elementwise); padded slots are 0.
Tensor embed_behavior(const FeatureBatch& batch, const EmbeddingTables& tables,
                      bool track_grad = true);
Tensor embed_context(const FeatureBatch& batch, const EmbeddingTables& tables,
                     bool track_grad = true);
Tensor embed_target(const FeatureBatch& batch, const EmbeddingTables& tables,
                    bool track_grad = true);

}  // namespace zsrec

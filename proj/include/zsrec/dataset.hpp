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
#include <string>
#include <vector>

#include "zsrec/tensor.hpp"
#include "zsrec/vocabulary.hpp"

namespace zsrec {

// Feature names used for vocabularies and embedding tables.
std::string attribute_feature(Index i);  // "attr_<i+1>"
std::string context_feature(Index i);    // "ctx_<i+1>"
std::string target_feature(Index i);     // "item" for i == 0, else "item_<i+1>"
inline constexpr const char* kItemFeature = "item";
inline constexpr const char* kActionFeature = "action";

// Widths and vocabulary sizes the models are built against.
struct FeatureSpec {
  Index embedding_dim = 32;
  Index max_seq_len = 100;
  std::vector<Index> attribute_vocab;  // one per attribute field
  std::vector<Index> context_vocab;    // one per context field
  std::vector<Index> target_vocab;     // [0] is the item vocabulary
  Index item_vocab = 1;
  Index action_vocab = 1;

  Index n_attributes() const { return static_cast<Index>(attribute_vocab.size()); }
  Index n_context() const { return static_cast<Index>(context_vocab.size()); }
  Index n_target() const { return static_cast<Index>(target_vocab.size()); }

  static FeatureSpec from_vocabularies(const VocabularySet& vocabs, Index n_attributes,
                                       Index n_context, Index n_target, Index embedding_dim,
                                       Index max_seq_len);
};

struct UserRecord {
  std::string id;
  std::vector<std::int32_t> attributes;
  // Behavior before the train/test cut, oldest first.
  std::vector<std::int32_t> items;
  std::vector<std::int32_t> actions;
};

struct ImpressionTable {
  std::vector<std::int32_t> user;  // index into Dataset::users
  std::vector<std::int32_t> day;
  std::vector<int> label;
  IdMatrix context;
  IdMatrix target;

  Index size() const { return static_cast<Index>(user.size()); }
};

struct IngestStats {
  Index rejected_rows = 0;
  Index total_rows = 0;
  Index unknown_values = 0;
  std::vector<std::string> rejections;  // "file:line: reason", first few only
};

// Encoded dataset: vocabularies from the training days, a train split
// (days 1..train_days) and a test split (the following day).
struct Dataset {
  FeatureSpec spec;
  VocabularySet vocabularies;
  std::vector<UserRecord> users;
  ImpressionTable train;
  ImpressionTable test;
  std::int32_t train_days = 0;
  // Ground-truth behavior of users whose behavior was masked; empty for
  // everyone else.
  std::vector<std::vector<std::int32_t>> withheld_items;
  std::vector<std::vector<std::int32_t>> withheld_actions;
  IngestStats stats;

  Index n_users() const { return static_cast<Index>(users.size()); }
  bool has_withheld(Index user) const {
    return user < static_cast<Index>(withheld_items.size()) && !withheld_items[user].empty();
  }
};

}  // namespace zsrec

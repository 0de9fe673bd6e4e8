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
#include <string>
#include <vector>

#include "zsrec/dataset.hpp"
#include "zsrec/random.hpp"

namespace zsrec {

inline constexpr const char* kUsersFile = "users.tsv";
inline constexpr const char* kBehaviorFile = "behavior.tsv";
inline constexpr const char* kImpressionsFile = "impressions.tsv";
// Ground-truth behavior of masked users. Optional.
inline constexpr const char* kWithheldFile = "withheld.tsv";
inline constexpr std::int64_t kSecondsPerDay = 86400;

// Uncoded rows as they appear in the TSV files. Every file starts with a
// header line; its column names fix the attribute, context and target counts.
//   users.tsv        user_id attr_1..attr_{n_a}
//   behavior.tsv     user_id item_id action_id timestamp
//   impressions.tsv  user_id day label ctx_1..ctx_{n_c} item_1..item_{n_t}
// Days are 1-based; day d covers timestamps [(d-1)*86400, d*86400) seconds.
struct RawUser {
  std::string id;
  std::vector<std::string> attributes;
};

struct RawEvent {
  std::string user;
  std::string item;
  std::string action;
  std::int64_t timestamp = 0;
};

struct RawImpression {
  std::string user;
  std::int32_t day = 1;
  int label = 0;
  std::vector<std::string> context;
  std::vector<std::string> target;
};

struct RawLog {
  Index n_attributes = 0;
  Index n_context = 0;
  Index n_target = 1;
  std::vector<RawUser> users;
  std::vector<RawEvent> behavior;
  std::vector<RawImpression> impressions;
  std::vector<RawEvent> withheld;
};

struct IngestOptions {
  // Days 1..train_days train, the next day tests. 0 means "all but the last day".
  std::int32_t train_days = 7;
  Index embedding_dim = 32;
  Index max_seq_len = 100;
  // Abort when more than this fraction of all rows is malformed.
  double max_reject_fraction = 0.01;
};

void write_raw_log(const RawLog& log, const std::filesystem::path& dir);

// Parses the files in `dir`, collecting malformed rows in `stats` instead of
// failing on them. Throws DataError on unreadable files or bad headers.
RawLog read_raw_log(const std::filesystem::path& dir, IngestStats& stats);

// Splits by day, builds vocabularies from the training days and encodes
// everything. Behavior at or after the cut is dropped.
Dataset encode(const RawLog& log, const IngestOptions& options, IngestStats stats = {});

// read_raw_log + encode, enforcing the reject limit.
Dataset ingest(const std::filesystem::path& dir, const IngestOptions& options);

// Exactly round(fraction * n) users, chosen by a seeded shuffle.
std::vector<bool> sample_users(Index n_users, double fraction, std::uint64_t seed);

// Moves the behavior of a sampled user subset into the withheld set. Returns
// the number of users masked.
Index mask_new_users(RawLog& log, double fraction, std::uint64_t seed);
Index mask_new_users(Dataset& data, double fraction, std::uint64_t seed);

// Interest-space generator: every user and item belongs to one of n_clusters
// latent interests. Attributes lean towards a per-cluster preferred value,
// behavior histories mostly stay in the home cluster, and impressions click
// with within_click inside the home cluster and cross_click outside it.
struct SyntheticConfig {
  Index n_users = 20000;
  Index n_items = 2000;
  Index n_clusters = 20;
  Index n_attributes = 6;
  Index attribute_cardinality = 8;
  double new_user_fraction = 0.4;
  double within_click = 0.25;
  double cross_click = 0.05;
  // Probability that a behavior event leaves the home cluster.
  double interest_radius = 0.1;
  // Probability that an attribute takes its cluster's preferred value.
  double attribute_signal = 0.6;
  double mean_seq_len = 60.0;
  std::int32_t days = 8;
  double impressions_per_day = 1.0;
  double test_impressions = 10.0;
  // Share of impressions drawn from the user's home cluster.
  double in_cluster_rate = 0.1;
  Index recall_methods = 4;
  double play_fraction = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticData {
  RawLog log;
  std::vector<std::int32_t> user_cluster;
  std::vector<std::int32_t> item_cluster;
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

}  // namespace zsrec

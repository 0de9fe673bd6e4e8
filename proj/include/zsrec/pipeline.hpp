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
#include <optional>
#include <vector>

#include "zsrec/config.hpp"
#include "zsrec/metrics.hpp"
#include "zsrec/trainer.hpp"

namespace zsrec {

// Ingests a TSV directory with the config's options and applies any extra
// masking (seeded from train.seed).
Dataset load_dataset(const Config& config, const std::filesystem::path& dir);

inline constexpr Index kScoringBatch = 4096;

struct Evaluation {
  ScoredRows scored;
  CohortReport report;
};
// Scores the test split and splits metrics by cohort.
Evaluation evaluate(MailModel& model, const Dataset& data);
CohortReport report_for(const ScoredRows& rows);

// Users in ascending index order.
std::vector<std::int32_t> new_users(const Dataset& data);
std::vector<std::int32_t> old_users(const Dataset& data);
// Users whose observed behavior was masked and kept as ground truth.
std::vector<std::int32_t> masked_users(const Dataset& data);

// Flattened [n x n_v*d] virtual behavior for the given users.
Matrix virtual_rows(const MailModel& model, const Dataset& data,
                    const std::vector<std::int32_t>& users);
// Flattened embedded ground-truth behavior of masked users.
Matrix withheld_rows(const MailModel& model, const Dataset& data,
                     const std::vector<std::int32_t>& users);

struct VirtualFidelity {
  Index users = 0;
  double mse = 0.0;           // v-hat vs withheld truth
  double shuffled_mse = 0.0;  // v-hat from a permutation of the users' attributes
};
// Mean squared error per element over masked users. The control permutes
// attribute rows among those users with the given seed.
VirtualFidelity virtual_fidelity(const MailModel& model, const Dataset& data,
                                 std::uint64_t seed);

// Hidden features of the given users; the behavior side only when every
// user has observed behavior.
HiddenFeatures hidden_for(const MailModel& model, const Dataset& data,
                          const std::vector<std::int32_t>& users);
// MMD between the attribute and behavior codes of the given old users.
double code_discrepancy(const MailModel& model, const Dataset& data,
                        const std::vector<std::int32_t>& users);

}  // namespace zsrec

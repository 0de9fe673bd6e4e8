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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zsrec {

// Probability that a random positive outscores a random negative, ties
// counting one half. nullopt unless both classes are present.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

// Per-user AUC averaged with impression-count weights over users that have
// both classes. nullopt when no user qualifies.
std::optional<double> gauc(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::int32_t> users);

// (improved - baseline) / baseline * 100. A baseline <= 0 throws
// ContractError.
double relative_change_percent(double baseline, double improved);
// The same, truncated toward zero at two decimals as printed in reports.
double relative_improvement(double baseline, double improved);

struct MetricsReport {
  std::string cohort;
  std::optional<double> auc;
  std::optional<double> gauc;
  std::int64_t impressions = 0;
  std::int64_t users = 0;
  std::int64_t positives = 0;

  // Attached by compare().
  std::string baseline_name;
  std::optional<double> baseline_auc;
  std::optional<double> baseline_gauc;
  std::optional<double> auc_ri;
  std::optional<double> gauc_ri;
};

// Metrics over the rows where `include` is set (all rows when empty).
MetricsReport metrics_report(const std::string& cohort, std::span<const double> scores,
                             std::span<const int> labels, std::span<const std::int32_t> users,
                             const std::vector<bool>& include = {});

struct CohortReport {
  MetricsReport new_users;
  MetricsReport old_users;
  MetricsReport all;
};

// flags[i] marks rows of new users.
CohortReport cohort_report(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::int32_t> users, const std::vector<bool>& flags);

// Attaches the baseline values and RI to `report`.
void compare(MetricsReport& report, const MetricsReport& baseline, const std::string& name);
void compare(CohortReport& report, const CohortReport& baseline, const std::string& name);

// "cohort,metric,value,baseline,ri" rows; undefined values print as NA.
std::string to_csv(const std::vector<MetricsReport>& reports);
// Aligned plain-text table of the same content.
std::string to_text(const std::vector<MetricsReport>& reports);

std::string format_metric(const std::optional<double>& v);

}  // namespace zsrec

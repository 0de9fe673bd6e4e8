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

#include "zsrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "zsrec/errors.hpp"

namespace zsrec {

namespace {

// Twice the Mann-Whitney U count over the given rows, plus P and N.
struct PairCount {
  std::int64_t twice_wins = 0;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
};

PairCount count_pairs(std::span<const double> scores, std::span<const int> labels,
                      std::vector<std::size_t>& order) {
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  PairCount c;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    // Positives in this tie group beat every negative below and half of the
    // tied negatives.
    c.twice_wins += pos * (2 * c.negatives + neg);
    c.positives += pos;
    c.negatives += neg;
    i = j;
  }
  return c;
}

std::optional<double> finish(const PairCount& c) {
  if (c.positives == 0 || c.negatives == 0) return std::nullopt;
  return static_cast<double>(c.twice_wins) /
         (2.0 * static_cast<double>(c.positives) * static_cast<double>(c.negatives));
}

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ContractError(fmt::format("{}: {} scores vs {} labels", what, a, b));
}

}  // namespace

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
  check_aligned(scores.size(), labels.size(), "auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return finish(count_pairs(scores, labels, order));
}

std::optional<double> gauc(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::int32_t> users) {
  check_aligned(scores.size(), labels.size(), "gauc");
  check_aligned(scores.size(), users.size(), "gauc");
  std::unordered_map<std::int32_t, std::vector<std::size_t>> groups;
  std::vector<std::int32_t> first_seen;
  for (std::size_t i = 0; i < users.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(users[i]);
    if (inserted) first_seen.push_back(users[i]);
    it->second.push_back(i);
  }
  double weighted = 0.0, weight = 0.0;
  for (std::int32_t u : first_seen) {
    std::vector<std::size_t>& rows = groups[u];
    const auto value = finish(count_pairs(scores, labels, rows));
    if (!value) continue;
    weighted += static_cast<double>(rows.size()) * *value;
    weight += static_cast<double>(rows.size());
  }
  if (weight == 0.0) return std::nullopt;
  return weighted / weight;
}

double relative_change_percent(double baseline, double improved) {
  if (!(baseline > 0.0)) {
    throw ContractError(fmt::format("relative improvement needs a positive baseline, got {}", baseline));
  }
  return (improved - baseline) / baseline * 100.0;
}

double relative_improvement(double baseline, double improved) {
  const double pct = relative_change_percent(baseline, improved);
  // The nudge keeps values such as 0.93 that land a hair below their decimal
  // representation from truncating to 0.92.
  const double t = std::trunc(pct * 100.0 + std::copysign(1e-7, pct)) / 100.0;
  return t == 0.0 ? 0.0 : t;
}

MetricsReport metrics_report(const std::string& cohort, std::span<const double> scores,
                             std::span<const int> labels, std::span<const std::int32_t> users,
                             const std::vector<bool>& include) {
  check_aligned(scores.size(), labels.size(), "metrics_report");
  check_aligned(scores.size(), users.size(), "metrics_report");
  if (!include.empty()) check_aligned(scores.size(), include.size(), "metrics_report");
  std::vector<double> s;
  std::vector<int> l;
  std::vector<std::int32_t> u;
  std::unordered_set<std::int32_t> distinct;
  MetricsReport r;
  r.cohort = cohort;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!include.empty() && !include[i]) continue;
    s.push_back(scores[i]);
    l.push_back(labels[i]);
    u.push_back(users[i]);
    distinct.insert(users[i]);
    r.positives += labels[i] == 1 ? 1 : 0;
  }
  r.impressions = static_cast<std::int64_t>(s.size());
  r.users = static_cast<std::int64_t>(distinct.size());
  r.auc = auc(s, l);
  r.gauc = gauc(s, l, u);
  return r;
}

CohortReport cohort_report(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::int32_t> users, const std::vector<bool>& flags) {
  check_aligned(scores.size(), flags.size(), "cohort_report");
  std::vector<bool> old_rows(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) old_rows[i] = !flags[i];
  std::vector<bool> new_rows = flags;
  CohortReport c;
  c.new_users = metrics_report("new", scores, labels, users, new_rows);
  c.old_users = metrics_report("old", scores, labels, users, old_rows);
  c.all = metrics_report("all", scores, labels, users);
  return c;
}

void compare(MetricsReport& report, const MetricsReport& baseline, const std::string& name) {
  report.baseline_name = name;
  report.baseline_auc = baseline.auc;
  report.baseline_gauc = baseline.gauc;
  report.auc_ri.reset();
  report.gauc_ri.reset();
  if (report.auc && baseline.auc && *baseline.auc > 0.0) {
    report.auc_ri = relative_improvement(*baseline.auc, *report.auc);
  }
  if (report.gauc && baseline.gauc && *baseline.gauc > 0.0) {
    report.gauc_ri = relative_improvement(*baseline.gauc, *report.gauc);
  }
}

void compare(CohortReport& report, const CohortReport& baseline, const std::string& name) {
  compare(report.new_users, baseline.new_users, name);
  compare(report.old_users, baseline.old_users, name);
  compare(report.all, baseline.all, name);
}

std::string format_metric(const std::optional<double>& v) {
  return v ? fmt::format("{:.6f}", *v) : std::string("NA");
}

namespace {

std::string format_ri(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v) : std::string("NA");
}

struct Row {
  std::string cohort, metric, value, baseline, ri;
};

std::vector<Row> rows_of(const std::vector<MetricsReport>& reports) {
  std::vector<Row> rows;
  for (const MetricsReport& r : reports) {
    const bool has_base = !r.baseline_name.empty();
    rows.push_back({r.cohort, "auc", format_metric(r.auc),
                    has_base ? format_metric(r.baseline_auc) : "", has_base ? format_ri(r.auc_ri) : ""});
    rows.push_back({r.cohort, "gauc", format_metric(r.gauc),
                    has_base ? format_metric(r.baseline_gauc) : "",
                    has_base ? format_ri(r.gauc_ri) : ""});
    rows.push_back({r.cohort, "impressions", std::to_string(r.impressions), "", ""});
    rows.push_back({r.cohort, "users", std::to_string(r.users), "", ""});
    rows.push_back({r.cohort, "positives", std::to_string(r.positives), "", ""});
  }
  return rows;
}

}  // namespace

std::string to_csv(const std::vector<MetricsReport>& reports) {
  std::string out = "cohort,metric,value,baseline,ri\n";
  for (const Row& r : rows_of(reports)) {
    out += fmt::format("{},{},{},{},{}\n", r.cohort, r.metric, r.value, r.baseline, r.ri);
  }
  return out;
}

std::string to_text(const std::vector<MetricsReport>& reports) {
  std::string base_name;
  for (const MetricsReport& r : reports) {
    if (!r.baseline_name.empty()) base_name = r.baseline_name;
  }
  std::string out;
  if (!base_name.empty()) out += fmt::format("baseline: {}\n", base_name);
  out += fmt::format("{:<8} {:<12} {:>10} {:>10} {:>8}\n", "cohort", "metric", "value", "baseline",
                     "RI(%)");
  for (const Row& r : rows_of(reports)) {
    out += fmt::format("{:<8} {:<12} {:>10} {:>10} {:>8}\n", r.cohort, r.metric, r.value,
                       r.baseline, r.ri);
  }
  return out;
}

}  // namespace zsrec

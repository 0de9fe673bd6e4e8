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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "zsrec/errors.hpp"
#include "zsrec/metrics.hpp"
#include "zsrec/random.hpp"

namespace zsrec {
namespace {

// O(P*N) pairwise count, returned as the same ratio the rank version forms.
std::optional<double> pairwise_auc(const std::vector<double>& s, const std::vector<int>& l) {
  std::int64_t twice = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < s.size(); ++i) (l[i] ? pos : neg) += 1;
  if (pos == 0 || neg == 0) return std::nullopt;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!l[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j]) continue;
      twice += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

TEST(Auc, HandCases) {
  EXPECT_EQ(*auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
  EXPECT_EQ(*auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(*auc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{0, 1, 0}), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_FALSE(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}).has_value());
  EXPECT_FALSE(auc(std::vector<double>{}, std::vector<int>{}).has_value());
}

TEST(Auc, EqualsPairwiseOracleExactly) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(999);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores so ties are common.
      s[i] = trial % 2 ? std::floor(rng.uniform() * 20) / 20 : rng.uniform();
      l[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    EXPECT_EQ(auc(s, l), pairwise_auc(s, l)) << "trial " << trial;
  }
}

TEST(Auc, InvariantUnderIncreasingTransforms) {
  Rng rng(2);
  std::vector<double> s(300), e(300), a(300);
  std::vector<int> l(300);
  for (std::size_t i = 0; i < 300; ++i) {
    s[i] = std::floor(rng.uniform() * 50) / 50;
    e[i] = std::exp(3.0 * s[i]);
    a[i] = 0.5 * s[i] + 7.0;
    l[i] = rng.bernoulli(0.4);
  }
  EXPECT_EQ(auc(s, l), auc(e, l));
  EXPECT_EQ(auc(s, l), auc(a, l));
}

TEST(Gauc, SingleUserEqualsAuc) {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  std::vector<int> l{0, 0, 1, 1};
  std::vector<std::int32_t> u{7, 7, 7, 7};
  EXPECT_EQ(gauc(s, l, u), auc(s, l));
}

TEST(Gauc, EqualCountsGiveArithmeticMean) {
  // User 1: AUC 1. User 2: AUC 0.
  std::vector<double> s{0.1, 0.9, 0.9, 0.1};
  std::vector<int> l{0, 1, 0, 1};
  std::vector<std::int32_t> u{1, 1, 2, 2};
  EXPECT_EQ(*gauc(s, l, u), 0.5);
}

TEST(Gauc, WeightsByImpressionCountAndSkipsSingleClassUsers) {
  // User A (2 rows): AUC 1. User B (3 rows): AUC 0.5. User C (5 rows): AUC 0.
  // User D (4 rows) has one class only and is excluded.
  std::vector<double> s{0.2, 0.8, 0.5, 0.5, 0.1, 0.9, 0.8, 0.7, 0.2, 0.1, 0.3, 0.2, 0.4, 0.9};
  std::vector<int> l{0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0};
  std::vector<std::int32_t> u{1, 1, 2, 2, 2, 3, 3, 3, 3, 3, 4, 4, 4, 4};
  // B: positives {0.5, 0.1}, negative {0.5}: (0.5 + 0) / 2 = 0.25.
  const double b = 0.25;
  EXPECT_NEAR(*gauc(s, l, u), (2 * 1.0 + 3 * b + 5 * 0.0) / 10.0, 1e-15);
}

TEST(Gauc, NoEligibleUserIsUndefined) {
  std::vector<double> s{0.2, 0.3};
  std::vector<int> l{1, 0};
  std::vector<std::int32_t> u{1, 2};
  EXPECT_FALSE(gauc(s, l, u).has_value());
}

TEST(RelativeImprovement, PublishedCells) {
  EXPECT_EQ(relative_improvement(0.5862, 0.5934), 1.22);
  EXPECT_EQ(relative_improvement(0.5800, 0.5854), 0.93);
  EXPECT_EQ(relative_improvement(0.6771, 0.6849), 1.15);
  EXPECT_EQ(relative_improvement(0.61, 0.61), 0.0);
  EXPECT_FALSE(std::signbit(relative_improvement(0.61, 0.61)));
}

TEST(RelativeImprovement, NegativeAndDomain) {
  EXPECT_EQ(relative_improvement(0.5, 0.49), -2.0);
  EXPECT_THROW(relative_improvement(0.0, 0.5), ContractError);
  EXPECT_THROW(relative_improvement(-1.0, 0.5), ContractError);
  EXPECT_NEAR(relative_change_percent(0.5862, 0.5934), 1.228249744, 1e-9);
}

TEST(CohortReport, EmptyNewCohortIsUndefined) {
  std::vector<double> s{0.1, 0.7, 0.3};
  std::vector<int> l{0, 1, 1};
  std::vector<std::int32_t> u{1, 2, 3};
  CohortReport r = cohort_report(s, l, u, {false, false, false});
  EXPECT_FALSE(r.new_users.auc.has_value());
  EXPECT_EQ(r.new_users.impressions, 0);
  EXPECT_EQ(r.old_users.auc, auc(s, l));
}

TEST(CohortReport, MatchesFilterThenScore) {
  Rng rng(3);
  std::vector<double> s(50);
  std::vector<int> l(50);
  std::vector<std::int32_t> u(50);
  std::vector<bool> f(50);
  for (std::size_t i = 0; i < 50; ++i) {
    s[i] = rng.uniform();
    l[i] = rng.bernoulli(0.4);
    u[i] = static_cast<std::int32_t>(rng.below(10));
    f[i] = u[i] < 4;
  }
  CohortReport r = cohort_report(s, l, u, f);
  std::vector<double> sn, so;
  std::vector<int> ln, lo;
  for (std::size_t i = 0; i < 50; ++i) {
    (f[i] ? sn : so).push_back(s[i]);
    (f[i] ? ln : lo).push_back(l[i]);
  }
  EXPECT_EQ(r.new_users.auc, auc(sn, ln));
  EXPECT_EQ(r.old_users.auc, auc(so, lo));
  EXPECT_EQ(r.new_users.impressions + r.old_users.impressions, 50);
}

TEST(CohortReport, SelfComparisonGivesZeroRi) {
  std::vector<double> s{0.1, 0.7, 0.3, 0.6};
  std::vector<int> l{0, 1, 1, 0};
  std::vector<std::int32_t> u{1, 1, 2, 2};
  CohortReport a = cohort_report(s, l, u, {true, true, false, false});
  CohortReport b = a;
  compare(a, b, "self");
  for (const MetricsReport* m : {&a.new_users, &a.old_users, &a.all}) {
    if (m->auc && *m->auc > 0.0) {
      ASSERT_TRUE(m->auc_ri.has_value());
      EXPECT_EQ(*m->auc_ri, 0.0);
    } else {
      EXPECT_FALSE(m->auc_ri.has_value());
    }
  }
  const std::string csv = to_csv({a.new_users, a.old_users});
  EXPECT_NE(csv.find("new,auc,1.000000,1.000000,0.00"), std::string::npos) << csv;
  EXPECT_NE(csv.find("old,auc,0.000000,0.000000,NA"), std::string::npos) << csv;
  EXPECT_EQ(csv.rfind("cohort,metric,value,baseline,ri\n", 0), 0u);
}

}  // namespace
}  // namespace zsrec

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

#include <fmt/format.h>

#include "zsrec/dataio.hpp"

namespace zsrec {

void SyntheticConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0)) throw ConfigError(fmt::format("{} must be positive, got {}", what, v));
  };
  auto probability = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(fmt::format("{} must be a probability in [0, 1], got {}", what, v));
    }
  };
  positive(static_cast<double>(n_users), "n_users");
  positive(static_cast<double>(n_items), "n_items");
  positive(static_cast<double>(n_clusters), "n_clusters");
  positive(static_cast<double>(attribute_cardinality), "attribute_cardinality");
  positive(static_cast<double>(recall_methods), "recall_methods");
  positive(mean_seq_len, "mean_seq_len");
  if (n_attributes < 0) throw ConfigError("n_attributes must be >= 0");
  if (n_clusters > n_items) {
    throw ConfigError(fmt::format("n_clusters ({}) exceeds n_items ({})", n_clusters, n_items));
  }
  if (!(new_user_fraction > 0.0 && new_user_fraction < 1.0)) {
    throw ConfigError(fmt::format("new_user_fraction must be in (0, 1), got {}", new_user_fraction));
  }
  probability(within_click, "within_click");
  probability(cross_click, "cross_click");
  probability(interest_radius, "interest_radius");
  probability(attribute_signal, "attribute_signal");
  probability(in_cluster_rate, "in_cluster_rate");
  probability(play_fraction, "play_fraction");
  if (days < 2) throw ConfigError(fmt::format("need at least 2 days, got {}", days));
  if (!(impressions_per_day >= 0.0) || !(test_impressions >= 0.0)) {
    throw ConfigError("impression rates must be >= 0");
  }
}

namespace {

// Geometric length on {1, 2, ...} with the given mean.
Index geometric_length(Rng& rng, double mean) {
  if (mean <= 1.0) return 1;
  const double p = 1.0 / mean;
  const double u = rng.uniform();
  return 1 + static_cast<Index>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& c) {
  c.validate();
  SyntheticData out;
  RawLog& log = out.log;
  log.n_attributes = c.n_attributes;
  log.n_context = 2;
  log.n_target = 2;

  std::vector<std::vector<Index>> cluster_items(c.n_clusters);
  out.item_cluster.resize(c.n_items);
  for (Index i = 0; i < c.n_items; ++i) {
    out.item_cluster[i] = static_cast<std::int32_t>(i % c.n_clusters);
    cluster_items[i % c.n_clusters].push_back(i);
  }
  auto item_name = [](Index i) { return fmt::format("i{}", i + 1); };
  auto category_name = [&](Index i) { return fmt::format("c{}", out.item_cluster[i] + 1); };

  Rng user_rng(derive_seed(c.seed, "synthetic.users"));
  std::vector<std::vector<Index>> preferred(c.n_clusters, std::vector<Index>(c.n_attributes));
  for (auto& row : preferred) {
    for (Index& v : row) v = static_cast<Index>(user_rng.below(c.attribute_cardinality));
  }
  out.user_cluster.resize(c.n_users);
  log.users.resize(c.n_users);
  for (Index u = 0; u < c.n_users; ++u) {
    const auto cluster = static_cast<Index>(user_rng.below(c.n_clusters));
    out.user_cluster[u] = static_cast<std::int32_t>(cluster);
    RawUser& user = log.users[u];
    user.id = fmt::format("u{}", u + 1);
    for (Index j = 0; j < c.n_attributes; ++j) {
      const Index v = user_rng.bernoulli(c.attribute_signal)
                          ? preferred[cluster][j]
                          : static_cast<Index>(user_rng.below(c.attribute_cardinality));
      user.attributes.push_back(fmt::format("a{}_{}", j + 1, v + 1));
    }
  }

  auto draw_item = [&](Rng& rng, Index cluster, double p_home) {
    if (rng.bernoulli(p_home)) {
      const auto& list = cluster_items[cluster];
      return list[rng.below(list.size())];
    }
    return static_cast<Index>(rng.below(c.n_items));
  };

  // Histories end just before day 1.
  Rng behavior_rng(derive_seed(c.seed, "synthetic.behavior"));
  for (Index u = 0; u < c.n_users; ++u) {
    const Index len = geometric_length(behavior_rng, c.mean_seq_len);
    for (Index k = 0; k < len; ++k) {
      const Index item = draw_item(behavior_rng, out.user_cluster[u], 1.0 - c.interest_radius);
      const char* action = behavior_rng.bernoulli(c.play_fraction) ? "play" : "click";
      log.behavior.push_back({log.users[u].id, item_name(item), action,
                              -static_cast<std::int64_t>(len - k) * 600});
    }
  }

  Rng imp_rng(derive_seed(c.seed, "synthetic.impressions"));
  for (std::int32_t day = 1; day <= c.days; ++day) {
    const double rate = day == c.days ? c.test_impressions : c.impressions_per_day;
    for (Index u = 0; u < c.n_users; ++u) {
      const auto count = imp_rng.poisson(rate);
      for (std::uint64_t k = 0; k < count; ++k) {
        const Index cluster = out.user_cluster[u];
        const Index item = draw_item(imp_rng, cluster, c.in_cluster_rate);
        const bool home = out.item_cluster[item] == cluster;
        RawImpression r;
        r.user = log.users[u].id;
        r.day = day;
        r.label = imp_rng.bernoulli(home ? c.within_click : c.cross_click) ? 1 : 0;
        r.context = {fmt::format("w{}", (day - 1) % 7 + 1),
                     fmt::format("r{}", imp_rng.below(c.recall_methods) + 1)};
        r.target = {item_name(item), category_name(item)};
        log.impressions.push_back(std::move(r));
      }
    }
  }

  mask_new_users(log, c.new_user_fraction, c.seed);
  return out;
}

}  // namespace zsrec

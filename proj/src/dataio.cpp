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

#include "zsrec/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace zsrec {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxListedRejections = 20;

void write_file(const fs::path& path, const fmt::memory_buffer& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void append_events(fmt::memory_buffer& buf, const std::vector<RawEvent>& events) {
  fmt::format_to(std::back_inserter(buf), "user_id\titem_id\taction_id\ttimestamp\n");
  for (const RawEvent& e : events) {
    fmt::format_to(std::back_inserter(buf), "{}\t{}\t{}\t{}\n", e.user, e.item, e.action,
                   e.timestamp);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Calls fn(line_number, fields) for every data row after the header.
template <typename Fn>
void for_each_row(const std::string& text, const std::string& file,
                  std::vector<std::string_view>& header, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!have_header) {
      header = split_tabs(line);
      if (header.empty() || header[0] != "user_id") {
        throw DataError(fmt::format("{}:{}: header must start with user_id", file, line_no));
      }
      have_header = true;
      continue;
    }
    fn(line_no, split_tabs(line));
  }
  if (!have_header) throw DataError(fmt::format("{}: missing header line", file));
}

class Rejector {
 public:
  Rejector(IngestStats& stats, std::string file) : stats_(stats), file_(std::move(file)) {}
  void row() { ++stats_.total_rows; }
  void reject(std::size_t line, const std::string& reason) {
    ++stats_.rejected_rows;
    if (stats_.rejections.size() < kMaxListedRejections) {
      stats_.rejections.push_back(fmt::format("{}:{}: {}", file_, line, reason));
    }
  }

 private:
  IngestStats& stats_;
  std::string file_;
};

std::vector<RawEvent> read_events(const fs::path& path, IngestStats& stats) {
  std::vector<RawEvent> events;
  std::vector<std::string_view> header;
  const std::string text = read_file(path);
  const std::string name = path.filename().string();
  Rejector rej(stats, name);
  for_each_row(text, name, header, [&](std::size_t line, const std::vector<std::string_view>& f) {
    rej.row();
    if (f.size() != 4) {
      rej.reject(line, fmt::format("expected 4 columns, got {}", f.size()));
      return;
    }
    RawEvent e;
    if (f[0].empty() || f[1].empty()) {
      rej.reject(line, "empty user or item id");
      return;
    }
    if (!parse_int(f[3], e.timestamp)) {
      rej.reject(line, fmt::format("bad timestamp '{}'", f[3]));
      return;
    }
    e.user = f[0];
    e.item = f[1];
    e.action = f[2];
    events.push_back(std::move(e));
  });
  if (header.size() != 4) {
    throw DataError(fmt::format("{}: expected header user_id item_id action_id timestamp", name));
  }
  return events;
}

}  // namespace

void write_raw_log(const RawLog& log, const fs::path& dir) {
  fs::create_directories(dir);
  fmt::memory_buffer users;
  fmt::format_to(std::back_inserter(users), "user_id");
  for (Index i = 0; i < log.n_attributes; ++i) {
    fmt::format_to(std::back_inserter(users), "\t{}", attribute_feature(i));
  }
  users.push_back('\n');
  for (const RawUser& u : log.users) {
    fmt::format_to(std::back_inserter(users), "{}", u.id);
    for (const std::string& a : u.attributes) fmt::format_to(std::back_inserter(users), "\t{}", a);
    users.push_back('\n');
  }
  write_file(dir / kUsersFile, users);

  fmt::memory_buffer behavior;
  append_events(behavior, log.behavior);
  write_file(dir / kBehaviorFile, behavior);

  fmt::memory_buffer imps;
  fmt::format_to(std::back_inserter(imps), "user_id\tday\tlabel");
  for (Index i = 0; i < log.n_context; ++i) {
    fmt::format_to(std::back_inserter(imps), "\t{}", context_feature(i));
  }
  for (Index i = 0; i < log.n_target; ++i) {
    fmt::format_to(std::back_inserter(imps), "\titem_{}", i + 1);
  }
  imps.push_back('\n');
  for (const RawImpression& r : log.impressions) {
    fmt::format_to(std::back_inserter(imps), "{}\t{}\t{}", r.user, r.day, r.label);
    for (const std::string& c : r.context) fmt::format_to(std::back_inserter(imps), "\t{}", c);
    for (const std::string& t : r.target) fmt::format_to(std::back_inserter(imps), "\t{}", t);
    imps.push_back('\n');
  }
  write_file(dir / kImpressionsFile, imps);

  if (!log.withheld.empty()) {
    fmt::memory_buffer withheld;
    append_events(withheld, log.withheld);
    write_file(dir / kWithheldFile, withheld);
  } else {
    fs::remove(dir / kWithheldFile);
  }
}

RawLog read_raw_log(const fs::path& dir, IngestStats& stats) {
  RawLog log;
  {
    std::vector<std::string_view> header;
    const std::string text = read_file(dir / kUsersFile);
    Rejector rej(stats, kUsersFile);
    std::unordered_map<std::string, std::size_t> seen;
    for_each_row(text, kUsersFile, header, [&](std::size_t line, const auto& f) {
      rej.row();
      if (f.size() != header.size()) {
        rej.reject(line, fmt::format("expected {} columns, got {}", header.size(), f.size()));
        return;
      }
      if (f[0].empty()) {
        rej.reject(line, "empty user id");
        return;
      }
      RawUser u{std::string(f[0]), {}};
      if (!seen.emplace(u.id, line).second) {
        rej.reject(line, fmt::format("duplicate user '{}'", u.id));
        return;
      }
      for (std::size_t i = 1; i < f.size(); ++i) u.attributes.emplace_back(f[i]);
      log.users.push_back(std::move(u));
    });
    log.n_attributes = static_cast<Index>(header.size()) - 1;
  }

  log.behavior = read_events(dir / kBehaviorFile, stats);
  if (fs::exists(dir / kWithheldFile)) log.withheld = read_events(dir / kWithheldFile, stats);

  {
    std::vector<std::string_view> header;
    const std::string text = read_file(dir / kImpressionsFile);
    Rejector rej(stats, kImpressionsFile);
    for_each_row(text, kImpressionsFile, header, [&](std::size_t line, const auto& f) {
      rej.row();
      if (f.size() != header.size()) {
        rej.reject(line, fmt::format("expected {} columns, got {}", header.size(), f.size()));
        return;
      }
      RawImpression r;
      r.user = f[0];
      if (!parse_int(f[1], r.day) || r.day < 1) {
        rej.reject(line, fmt::format("bad day '{}'", f[1]));
        return;
      }
      if (f[2] != "0" && f[2] != "1") {
        rej.reject(line, fmt::format("label must be 0 or 1, got '{}'", f[2]));
        return;
      }
      r.label = f[2] == "1" ? 1 : 0;
      for (std::size_t i = 3; i < f.size(); ++i) {
        if (header[i].starts_with("ctx_")) {
          r.context.emplace_back(f[i]);
        } else {
          r.target.emplace_back(f[i]);
        }
      }
      if (r.target.empty() || r.target[0].empty()) {
        rej.reject(line, "missing item id");
        return;
      }
      log.impressions.push_back(std::move(r));
    });
    if (header.size() < 4 || header[1] != "day" || header[2] != "label") {
      throw DataError(
          "impressions.tsv: expected header user_id day label ctx_... item_1 [item_2 ...]");
    }
    log.n_context = 0;
    log.n_target = 0;
    for (std::size_t i = 3; i < header.size(); ++i) {
      if (header[i].starts_with("ctx_")) {
        if (log.n_target > 0) throw DataError("impressions.tsv: context columns must precede items");
        ++log.n_context;
      } else {
        ++log.n_target;
      }
    }
    if (log.n_target == 0) throw DataError("impressions.tsv: no item column");
  }
  return log;
}

namespace {

struct UserIndex {
  std::unordered_map<std::string, std::int32_t> ids;
  std::int32_t find(const std::string& id) const {
    auto it = ids.find(id);
    return it == ids.end() ? -1 : it->second;
  }
};

std::int32_t encode_value(const Vocabulary& vocab, const std::string& raw, IngestStats& stats) {
  if (raw.empty()) return Vocabulary::kPadding;
  const std::int32_t id = vocab.lookup(raw);
  if (id == Vocabulary::kPadding) ++stats.unknown_values;
  return id;
}

}  // namespace

Dataset encode(const RawLog& log, const IngestOptions& options, IngestStats stats) {
  std::int32_t train_days = options.train_days;
  if (train_days == 0) {
    std::int32_t last = 1;
    for (const RawImpression& r : log.impressions) last = std::max(last, r.day);
    train_days = std::max(1, last - 1);
  }
  if (train_days < 0) throw ConfigError(fmt::format("train_days must be >= 0, got {}", train_days));
  const std::int64_t cut = static_cast<std::int64_t>(train_days) * kSecondsPerDay;

  UserIndex users;
  for (std::size_t i = 0; i < log.users.size(); ++i) {
    users.ids.emplace(log.users[i].id, static_cast<std::int32_t>(i));
  }

  // Vocabularies from training-day data only.
  std::vector<std::vector<std::string>> attr_values(log.n_attributes);
  for (const RawUser& u : log.users) {
    for (Index i = 0; i < log.n_attributes; ++i) {
      if (!u.attributes[i].empty()) attr_values[i].push_back(u.attributes[i]);
    }
  }
  std::vector<std::vector<std::string>> ctx_values(log.n_context), tgt_values(log.n_target);
  std::vector<std::string> action_values;
  for (const RawImpression& r : log.impressions) {
    if (r.day > train_days) continue;
    for (Index i = 0; i < log.n_context; ++i) {
      if (!r.context[i].empty()) ctx_values[i].push_back(r.context[i]);
    }
    for (Index i = 0; i < log.n_target; ++i) {
      if (!r.target[i].empty()) tgt_values[i].push_back(r.target[i]);
    }
  }
  for (const RawEvent& e : log.behavior) {
    if (e.timestamp >= cut) continue;
    tgt_values[0].push_back(e.item);
    if (!e.action.empty()) action_values.push_back(e.action);
  }

  Dataset d;
  d.train_days = train_days;
  for (Index i = 0; i < log.n_attributes; ++i) {
    d.vocabularies.add(Vocabulary::build(attribute_feature(i), std::move(attr_values[i])));
  }
  for (Index i = 0; i < log.n_context; ++i) {
    d.vocabularies.add(Vocabulary::build(context_feature(i), std::move(ctx_values[i])));
  }
  for (Index i = 0; i < log.n_target; ++i) {
    d.vocabularies.add(Vocabulary::build(target_feature(i), std::move(tgt_values[i])));
  }
  d.vocabularies.add(Vocabulary::build(kActionFeature, std::move(action_values)));
  d.spec = FeatureSpec::from_vocabularies(d.vocabularies, log.n_attributes, log.n_context,
                                          log.n_target, options.embedding_dim, options.max_seq_len);

  const Vocabulary& item_vocab = d.vocabularies.at(kItemFeature);
  const Vocabulary& action_vocab = d.vocabularies.at(kActionFeature);

  d.users.resize(log.users.size());
  for (std::size_t u = 0; u < log.users.size(); ++u) {
    UserRecord& rec = d.users[u];
    rec.id = log.users[u].id;
    for (Index i = 0; i < log.n_attributes; ++i) {
      rec.attributes.push_back(
          encode_value(d.vocabularies.at(attribute_feature(i)), log.users[u].attributes[i], stats));
    }
  }

  // Events per user in timestamp order; ties keep file order.
  auto encode_events = [&](const std::vector<RawEvent>& events, const char* file,
                           std::vector<std::vector<std::int32_t>>& items,
                           std::vector<std::vector<std::int32_t>>& actions) {
    items.assign(log.users.size(), {});
    actions.assign(log.users.size(), {});
    std::vector<std::vector<std::pair<std::int64_t, std::size_t>>> per_user(log.users.size());
    for (std::size_t k = 0; k < events.size(); ++k) {
      const RawEvent& e = events[k];
      const std::int32_t u = users.find(e.user);
      if (u < 0) {
        ++stats.rejected_rows;
        if (stats.rejections.size() < kMaxListedRejections) {
          stats.rejections.push_back(fmt::format("{}: event for unknown user '{}'", file, e.user));
        }
        continue;
      }
      if (e.timestamp >= cut) continue;
      per_user[u].emplace_back(e.timestamp, k);
    }
    for (std::size_t u = 0; u < per_user.size(); ++u) {
      auto& list = per_user[u];
      std::stable_sort(list.begin(), list.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [ts, k] : list) {
        items[u].push_back(encode_value(item_vocab, events[k].item, stats));
        actions[u].push_back(encode_value(action_vocab, events[k].action, stats));
      }
    }
  };
  std::vector<std::vector<std::int32_t>> items, actions;
  encode_events(log.behavior, kBehaviorFile, items, actions);
  for (std::size_t u = 0; u < d.users.size(); ++u) {
    d.users[u].items = std::move(items[u]);
    d.users[u].actions = std::move(actions[u]);
  }
  encode_events(log.withheld, kWithheldFile, d.withheld_items, d.withheld_actions);

  // Impressions.
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t k = 0; k < log.impressions.size(); ++k) {
    const RawImpression& r = log.impressions[k];
    if (users.find(r.user) < 0) {
      ++stats.rejected_rows;
      if (stats.rejections.size() < kMaxListedRejections) {
        stats.rejections.push_back(
            fmt::format("{}: impression for unknown user '{}'", kImpressionsFile, r.user));
      }
      continue;
    }
    if (r.day <= train_days) {
      train_rows.push_back(k);
    } else if (r.day == train_days + 1) {
      test_rows.push_back(k);
    }
  }
  auto fill = [&](const std::vector<std::size_t>& rows, ImpressionTable& t) {
    const Index n = static_cast<Index>(rows.size());
    t.user.resize(n);
    t.day.resize(n);
    t.label.resize(n);
    t.context.resize(n, log.n_context);
    t.target.resize(n, log.n_target);
    for (Index i = 0; i < n; ++i) {
      const RawImpression& r = log.impressions[rows[i]];
      t.user[i] = users.find(r.user);
      t.day[i] = r.day;
      t.label[i] = r.label;
      for (Index j = 0; j < log.n_context; ++j) {
        t.context(i, j) = encode_value(d.vocabularies.at(context_feature(j)), r.context[j], stats);
      }
      for (Index j = 0; j < log.n_target; ++j) {
        t.target(i, j) = encode_value(d.vocabularies.at(target_feature(j)), r.target[j], stats);
      }
    }
  };
  fill(train_rows, d.train);
  fill(test_rows, d.test);
  d.stats = std::move(stats);
  return d;
}

Dataset ingest(const fs::path& dir, const IngestOptions& options) {
  IngestStats stats;
  RawLog log = read_raw_log(dir, stats);
  Dataset d = encode(log, options, std::move(stats));
  const IngestStats& s = d.stats;
  for (const std::string& r : s.rejections) spdlog::warn("rejected row {}", r);
  if (s.total_rows > 0 &&
      static_cast<double>(s.rejected_rows) > options.max_reject_fraction * static_cast<double>(s.total_rows)) {
    throw DataError(fmt::format("{} of {} rows rejected (limit {:.1f}%); first: {}", s.rejected_rows,
                                s.total_rows, 100.0 * options.max_reject_fraction,
                                s.rejections.empty() ? "-" : s.rejections.front()));
  }
  if (d.train.size() == 0) throw DataError("no training impressions in days 1.." + std::to_string(d.train_days));
  return d;
}

std::vector<bool> sample_users(Index n_users, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError(fmt::format("mask fraction must be in [0, 1), got {}", fraction));
  }
  std::vector<Index> order(n_users);
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(seed, "mask"));
  for (Index i = n_users - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  const Index count = static_cast<Index>(std::llround(fraction * static_cast<double>(n_users)));
  std::vector<bool> chosen(n_users, false);
  for (Index k = 0; k < count; ++k) chosen[order[k]] = true;
  return chosen;
}

Index mask_new_users(RawLog& log, double fraction, std::uint64_t seed) {
  const std::vector<bool> chosen = sample_users(static_cast<Index>(log.users.size()), fraction, seed);
  std::unordered_map<std::string, bool> masked;
  Index count = 0;
  for (std::size_t u = 0; u < log.users.size(); ++u) {
    masked.emplace(log.users[u].id, chosen[u]);
    count += chosen[u] ? 1 : 0;
  }
  std::vector<RawEvent> kept;
  for (RawEvent& e : log.behavior) {
    auto it = masked.find(e.user);
    if (it != masked.end() && it->second) {
      log.withheld.push_back(std::move(e));
    } else {
      kept.push_back(std::move(e));
    }
  }
  log.behavior = std::move(kept);
  return count;
}

Index mask_new_users(Dataset& data, double fraction, std::uint64_t seed) {
  const std::vector<bool> chosen = sample_users(data.n_users(), fraction, seed);
  data.withheld_items.resize(data.users.size());
  data.withheld_actions.resize(data.users.size());
  Index count = 0;
  for (std::size_t u = 0; u < data.users.size(); ++u) {
    if (!chosen[u]) continue;
    ++count;
    auto& items = data.withheld_items[u];
    auto& actions = data.withheld_actions[u];
    items.insert(items.end(), data.users[u].items.begin(), data.users[u].items.end());
    actions.insert(actions.end(), data.users[u].actions.begin(), data.users[u].actions.end());
    data.users[u].items.clear();
    data.users[u].actions.clear();
  }
  return count;
}

}  // namespace zsrec

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

#include "zsrec/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace zsrec {

namespace {

const std::map<Variant, const char*> kVariantNames{{Variant::kBaseDnn, "basednn"},
                                                   {Variant::kNone, "none"},
                                                   {Variant::kSingle, "single"},
                                                   {Variant::kDual, "dual"},
                                                   {Variant::kBase, "base"}};

}  // namespace

const char* to_string(Variant v) { return kVariantNames.at(v); }

Variant parse_variant(const std::string& name) {
  for (const auto& [v, n] : kVariantNames) {
    if (name == n) return v;
  }
  throw ConfigError(
      fmt::format("unknown variant '{}' (expected basednn, none, single, dual or base)", name));
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::kBaseDnn, Variant::kNone, Variant::kSingle,
                                      Variant::kDual, Variant::kBase};
  return v;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, raw));
  }
  return value;
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, raw));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(fmt::format("{}: '{}' is not true/false", key, raw));
}

// "1024,512" or "1024-512".
std::vector<Index> parse_widths(const std::string& key, const std::string& raw) {
  std::vector<Index> out;
  std::string item;
  for (char ch : raw + ",") {
    if (ch == ',' || ch == '-') {
      if (trim(item).empty()) throw ConfigError(fmt::format("{}: malformed list '{}'", key, raw));
      out.push_back(parse_integer<Index>(key, item));
      item.clear();
    } else {
      item += ch;
    }
  }
  return out;
}

std::string format_widths(const std::vector<Index>& w) { return fmt::format("{}", fmt::join(w, ",")); }

std::string format_double(double v) { return fmt::format("{}", v); }

struct Field {
  std::string section;
  std::string name;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define ZSREC_INT(sec, key, member, type)                                                \
  Field {                                                                                \
    sec, #key, [](Config& c, const std::string& v) {                                     \
      c.member = parse_integer<type>(std::string(sec) + "." #key, v);                   \
    },                                                                                   \
        [](const Config& c) { return std::to_string(c.member); }                         \
  }
#define ZSREC_DOUBLE(sec, key, member)                                                   \
  Field {                                                                                \
    sec, #key,                                                                           \
        [](Config& c, const std::string& v) {                                            \
          c.member = parse_double(std::string(sec) + "." #key, v);                       \
        },                                                                               \
        [](const Config& c) { return format_double(c.member); }                          \
  }
#define ZSREC_WIDTHS(sec, key, member)                                                   \
  Field {                                                                                \
    sec, #key,                                                                           \
        [](Config& c, const std::string& v) {                                            \
          c.member = parse_widths(std::string(sec) + "." #key, v);                       \
        },                                                                               \
        [](const Config& c) { return format_widths(c.member); }                          \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f{
      ZSREC_INT("model", embedding_dim, model.embedding_dim, Index),
      ZSREC_INT("model", max_seq_len, model.max_seq_len, Index),
      ZSREC_INT("model", attention_dim, model.attention_dim, Index),
      ZSREC_WIDTHS("model", encoder_widths, model.encoder_widths),
      ZSREC_INT("model", hidden_dim, model.hidden_dim, Index),
      ZSREC_WIDTHS("model", decoder_widths, model.decoder_widths),
      ZSREC_WIDTHS("model", mlp_widths, model.mlp_widths),
      ZSREC_DOUBLE("model", dropout, model.dropout),
      ZSREC_DOUBLE("model", leaky_slope, model.leaky_slope),

      ZSREC_DOUBLE("train", learning_rate, train.learning_rate),
      ZSREC_INT("train", batch_size, train.batch_size, Index),
      ZSREC_INT("train", epochs, train.epochs, std::int32_t),
      ZSREC_DOUBLE("train", beta1, train.beta1),
      ZSREC_DOUBLE("train", beta2, train.beta2),
      ZSREC_DOUBLE("train", epsilon, train.epsilon),
      ZSREC_INT("train", seed, train.seed, std::uint64_t),
      Field{"train", "variant",
            [](Config& c, const std::string& v) { c.train.variant = parse_variant(trim(v)); },
            [](const Config& c) { return std::string(to_string(c.train.variant)); }},
      Field{"train", "detach_virtual",
            [](Config& c, const std::string& v) {
              c.train.detach_virtual = parse_bool("train.detach_virtual", v);
            },
            [](const Config& c) { return std::string(c.train.detach_virtual ? "true" : "false"); }},

      ZSREC_INT("data", train_days, data.train_days, std::int32_t),
      ZSREC_DOUBLE("data", mask_fraction, data.mask_fraction),
      ZSREC_DOUBLE("data", max_reject_fraction, data.max_reject_fraction),
      ZSREC_INT("data", n_users, data.synthetic.n_users, Index),
      ZSREC_INT("data", n_items, data.synthetic.n_items, Index),
      ZSREC_INT("data", n_clusters, data.synthetic.n_clusters, Index),
      ZSREC_INT("data", n_attributes, data.synthetic.n_attributes, Index),
      ZSREC_INT("data", attribute_cardinality, data.synthetic.attribute_cardinality, Index),
      ZSREC_DOUBLE("data", new_user_fraction, data.synthetic.new_user_fraction),
      ZSREC_DOUBLE("data", within_click, data.synthetic.within_click),
      ZSREC_DOUBLE("data", cross_click, data.synthetic.cross_click),
      ZSREC_DOUBLE("data", interest_radius, data.synthetic.interest_radius),
      ZSREC_DOUBLE("data", attribute_signal, data.synthetic.attribute_signal),
      ZSREC_DOUBLE("data", mean_seq_len, data.synthetic.mean_seq_len),
      ZSREC_INT("data", days, data.synthetic.days, std::int32_t),
      ZSREC_DOUBLE("data", impressions_per_day, data.synthetic.impressions_per_day),
      ZSREC_DOUBLE("data", test_impressions, data.synthetic.test_impressions),
      ZSREC_DOUBLE("data", in_cluster_rate, data.synthetic.in_cluster_rate),
      ZSREC_INT("data", recall_methods, data.synthetic.recall_methods, Index),
      ZSREC_DOUBLE("data", play_fraction, data.synthetic.play_fraction),
  };
  return f;
}

#undef ZSREC_INT
#undef ZSREC_DOUBLE
#undef ZSREC_WIDTHS

const Field* find_field(const std::string& section, const std::string& name) {
  for (const Field& f : fields()) {
    if (f.section == section && f.name == name) return &f;
  }
  return nullptr;
}

}  // namespace

void Config::validate() const {
  auto positive = [](double v, const std::string& what) {
    if (!(v > 0)) throw ConfigError(fmt::format("{} must be positive, got {}", what, v));
  };
  positive(static_cast<double>(model.embedding_dim), "model.embedding_dim");
  positive(static_cast<double>(model.max_seq_len), "model.max_seq_len");
  if (model.attention_dim < 0) throw ConfigError("model.attention_dim must be >= 0");
  positive(static_cast<double>(model.hidden_dim), "model.hidden_dim");
  if (model.encoder_widths.size() != 2) throw ConfigError("model.encoder_widths needs 2 entries");
  if (model.decoder_widths.size() != 2) throw ConfigError("model.decoder_widths needs 2 entries");
  if (model.mlp_widths.empty()) throw ConfigError("model.mlp_widths needs at least 1 entry");
  for (Index w : model.encoder_widths) positive(static_cast<double>(w), "model.encoder_widths");
  for (Index w : model.decoder_widths) positive(static_cast<double>(w), "model.decoder_widths");
  for (Index w : model.mlp_widths) positive(static_cast<double>(w), "model.mlp_widths");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) {
    throw ConfigError(fmt::format("model.dropout must be in [0, 1), got {}", model.dropout));
  }
  if (!(train.learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
  if (train.batch_size < 2) throw ConfigError("train.batch_size must be at least 2");
  if (train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!(train.beta1 >= 0.0 && train.beta1 < 1.0) || !(train.beta2 >= 0.0 && train.beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must be in [0, 1)");
  }
  positive(train.epsilon, "train.epsilon");
  if (data.train_days < 0) throw ConfigError("data.train_days must be >= 0");
  if (!(data.mask_fraction >= 0.0 && data.mask_fraction < 1.0)) {
    throw ConfigError("data.mask_fraction must be in [0, 1)");
  }
  if (!(data.max_reject_fraction >= 0.0 && data.max_reject_fraction <= 1.0)) {
    throw ConfigError("data.max_reject_fraction must be in [0, 1]");
  }
}

IngestOptions Config::ingest_options() const {
  IngestOptions o;
  o.train_days = data.train_days;
  o.embedding_dim = model.embedding_dim;
  o.max_seq_len = model.max_seq_len;
  o.max_reject_fraction = data.max_reject_fraction;
  return o;
}

Config parse_config(const std::string& text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }
  Config c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(fmt::format("{}: key '{}' outside a section", origin, section));
    }
    if (section != "model" && section != "train" && section != "data") {
      throw ConfigError(fmt::format("{}: unknown section [{}]", origin, section));
    }
    for (const auto& [key, value] : body) {
      const Field* f = find_field(section, key);
      if (!f) throw ConfigError(fmt::format("{}: unknown key {}.{}", origin, section, key));
      f->set(c, value.data());
    }
  }
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_override(Config& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = assignment.substr(eq + 1);
  const Field* target = nullptr;
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    target = find_field(key.substr(0, dot), key.substr(dot + 1));
  } else {
    for (const Field& f : fields()) {
      if (f.name != key) continue;
      if (target) throw ConfigError(fmt::format("override key '{}' is ambiguous", key));
      target = &f;
    }
  }
  if (!target) throw ConfigError(fmt::format("unknown override key '{}'", key));
  target->set(config, value);
  config.validate();
}

std::string to_ini(const Config& config) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.name + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace zsrec

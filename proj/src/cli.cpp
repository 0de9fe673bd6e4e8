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

#include "zsrec/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "zsrec/manifest.hpp"
#include "zsrec/matrix_io.hpp"
#include "zsrec/pipeline.hpp"

namespace zsrec {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPrecedence =
    "Configuration precedence, lowest to highest: built-in defaults, --config file, --set "
    "overrides in the order given, --variant, --seed.";

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  std::string data;
  std::string model;
  std::string scores;
  std::string baseline;
  std::string cohort;
  std::vector<std::string> variants;
  std::string variant;
  Index limit = 1000;
};

void add_config_options(CLI::App* cmd, Options& o, bool seed_required) {
  cmd->add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
  auto* seed = cmd->add_option("--seed", o.seed, "Seed for every random stream");
  if (seed_required) seed->required();
  cmd->add_option("--set", o.overrides, "Override a config key (key=value), repeatable")
      ->allow_extra_args(false);
}

Config build_config(const Options& o) {
  Config c = o.config_path.empty() ? Config{} : load_config(o.config_path);
  for (const std::string& s : o.overrides) apply_override(c, s);
  if (!o.variant.empty()) c.train.variant = parse_variant(o.variant);
  if (o.seed) c.train.seed = *o.seed;
  c.validate();
  return c;
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + out);
  return dir;
}

std::vector<std::string> user_ids(const Dataset& data) {
  std::vector<std::string> ids;
  ids.reserve(data.users.size());
  for (const UserRecord& u : data.users) ids.push_back(u.id);
  return ids;
}

std::vector<MetricsReport> selected(const CohortReport& r, const std::string& cohort) {
  if (cohort == "new") return {r.new_users};
  if (cohort == "old") return {r.old_users};
  if (cohort == "all") return {r.all};
  return {r.new_users, r.old_users, r.all};
}

void write_reports(const fs::path& dir, const std::vector<MetricsReport>& reports,
                   Manifest& manifest) {
  write_text_file(dir / "metrics.csv", to_csv(reports));
  write_text_file(dir / "metrics.txt", to_text(reports));
  manifest.add_output(dir / "metrics.csv");
  manifest.add_output(dir / "metrics.txt");
}

Checkpoint read_model(const Options& o, Manifest& manifest) {
  manifest.add_input("model", o.model);
  return load_checkpoint(o.model);
}

Config checkpoint_config(const Checkpoint& ckpt) {
  auto it = ckpt.text.find("config");
  if (it == ckpt.text.end()) throw DataError("checkpoint has no config record");
  return parse_config(it->second, "checkpoint");
}

// --- commands --------------------------------------------------------------

void gen_data(const Options& o, Manifest& manifest) {
  Config c = build_config(o);
  c.data.synthetic.seed = c.train.seed;
  manifest.set_config(to_ini(c));
  manifest.set_seed(c.train.seed);
  const fs::path out = prepare_out(o.out);
  const SyntheticData data = generate_synthetic(c.data.synthetic);
  manifest.mark("generate");
  write_raw_log(data.log, out);
  std::string clusters = "user_id\tcluster\n";
  for (std::size_t u = 0; u < data.log.users.size(); ++u) {
    clusters += fmt::format("{}\t{}\n", data.log.users[u].id, data.user_cluster[u]);
  }
  write_text_file(out / "clusters.tsv", clusters);
  write_text_file(out / "config.ini", to_ini(c));
  for (const char* f : {kUsersFile, kBehaviorFile, kImpressionsFile, kWithheldFile}) {
    if (fs::exists(out / f)) manifest.add_output(out / f);
  }
  manifest.add_output(out / "clusters.tsv");
  manifest.mark("write");
  std::cout << fmt::format("wrote {} users, {} behavior events, {} impressions to {}\n",
                           data.log.users.size(), data.log.behavior.size(),
                           data.log.impressions.size(), out.string());
}

// Trains one variant into `dir` and returns the evaluation of its test split.
Evaluation train_into(const Config& c, const Dataset& data, const fs::path& dir,
                      Manifest& manifest) {
  Trainer trainer(c, data);
  trainer.train(dir);
  manifest.mark(std::string("train.") + to_string(c.train.variant));
  write_text_file(dir / "history.csv", history_csv(trainer.history()));
  write_text_file(dir / "config.ini", to_ini(c));
  Evaluation e = evaluate(trainer.model(), data);
  write_scores(dir / "scores.tsv", e.scored, user_ids(data));
  manifest.mark(std::string("eval.") + to_string(c.train.variant));
  return e;
}

void train(const Options& o, Manifest& manifest) {
  const Config c = build_config(o);
  manifest.set_config(to_ini(c));
  manifest.set_seed(c.train.seed);
  manifest.add_input("data", o.data);
  const fs::path out = prepare_out(o.out);
  const Dataset data = load_dataset(c, o.data);
  manifest.mark("ingest");
  const Evaluation e = train_into(c, data, out, manifest);
  const std::vector<MetricsReport> reports = selected(e.report, "");
  write_reports(out, reports, manifest);
  for (const char* f : {"model.ckpt", "history.csv", "config.ini", "scores.tsv"}) {
    manifest.add_output(out / f);
  }
  std::cout << to_text(reports);
}

void eval(const Options& o, Manifest& manifest) {
  if (o.model.empty() == o.scores.empty()) {
    throw ConfigError("eval needs exactly one of --model or --scores");
  }
  if (!o.model.empty() && o.data.empty()) throw ConfigError("eval --model needs --data");
  const fs::path out = prepare_out(o.out);
  ScoreFile scores;
  if (!o.model.empty()) {
    const Checkpoint ckpt = read_model(o, manifest);
    const Config c = checkpoint_config(ckpt);
    manifest.set_config(to_ini(c));
    manifest.set_seed(c.train.seed);
    manifest.add_input("data", o.data);
    const Dataset data = load_dataset(c, o.data);
    auto model = load_model(ckpt, data.spec);
    manifest.mark("load");
    scores.rows = score_impressions(*model, data, data.test, kScoringBatch);
    scores.user_ids = user_ids(data);
    write_scores(out / "scores.tsv", scores.rows, scores.user_ids);
    manifest.add_output(out / "scores.tsv");
  } else {
    manifest.add_input("scores", o.scores);
    scores = read_scores(o.scores);
  }
  manifest.mark("score");
  CohortReport report = report_for(scores.rows);
  if (!o.baseline.empty()) {
    manifest.add_input("baseline", o.baseline);
    const ScoreFile base = read_scores(o.baseline);
    if (base.rows.labels != scores.rows.labels || base.rows.flags != scores.rows.flags) {
      throw DataError("baseline score file does not cover the same impressions");
    }
    compare(report, report_for(base.rows), fs::path(o.baseline).string());
  }
  const std::vector<MetricsReport> reports = selected(report, o.cohort);
  write_reports(out, reports, manifest);
  std::cout << to_text(reports);
}

void ablate(const Options& o, Manifest& manifest) {
  const Config base = build_config(o);
  std::vector<Variant> variants;
  for (const std::string& name : o.variants) variants.push_back(parse_variant(name));
  if (variants.empty()) variants = all_variants();
  manifest.set_config(to_ini(base));
  manifest.set_seed(base.train.seed);
  manifest.add_input("data", o.data);
  const fs::path out = prepare_out(o.out);
  const Dataset data = load_dataset(base, o.data);
  manifest.mark("ingest");

  std::vector<std::pair<Variant, CohortReport>> results;
  for (Variant v : variants) {
    Config c = base;
    c.train.variant = v;
    const fs::path dir = prepare_out((out / to_string(v)).string());
    spdlog::info("ablation: training {}", to_string(v));
    results.emplace_back(v, train_into(c, data, dir, manifest).report);
  }
  const CohortReport* reference = nullptr;
  for (const auto& [v, r] : results) {
    if (v == Variant::kBaseDnn) reference = &r;
  }
  std::string table = "variant,cohort,auc,gauc,auc_ri,gauc_ri\n";
  std::string text;
  for (auto& [v, r] : results) {
    if (reference != nullptr) compare(r, *reference, to_string(Variant::kBaseDnn));
    const fs::path dir = out / to_string(v);
    const std::vector<MetricsReport> reports = selected(r, "");
    write_text_file(dir / "metrics.csv", to_csv(reports));
    write_text_file(dir / "metrics.txt", to_text(reports));
    manifest.add_output(dir / "metrics.csv");
    text += fmt::format("== {} ==\n{}", to_string(v), to_text(reports));
    for (const MetricsReport& m : reports) {
      table += fmt::format("{},{},{},{},{},{}\n", to_string(v), m.cohort, format_metric(m.auc),
                           format_metric(m.gauc),
                           m.auc_ri ? fmt::format("{:.2f}", *m.auc_ri) : "NA",
                           m.gauc_ri ? fmt::format("{:.2f}", *m.gauc_ri) : "NA");
    }
  }
  write_text_file(out / "ablation.csv", table);
  write_text_file(out / "ablation.txt", text);
  write_text_file(out / "config.ini", to_ini(base));
  manifest.add_output(out / "ablation.csv");
  std::cout << text;
}

void export_virtual(const Options& o, Manifest& manifest) {
  const Checkpoint ckpt = read_model(o, manifest);
  const Config c = checkpoint_config(ckpt);
  manifest.set_config(to_ini(c));
  manifest.set_seed(c.train.seed);
  manifest.add_input("data", o.data);
  const fs::path out = prepare_out(o.out);
  const Dataset data = load_dataset(c, o.data);
  auto model = load_model(ckpt, data.spec);
  const std::vector<std::int32_t> users = new_users(data);
  const Matrix v = virtual_rows(*model, data, users);
  const Index n_v = data.spec.max_seq_len;
  const Index d = data.spec.embedding_dim;
  std::ostringstream blocks;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const Matrix one =
        Eigen::Map<const Matrix>(v.row(static_cast<Index>(i)).data(), n_v, d);
    write_matrix(blocks, data.users[static_cast<std::size_t>(users[i])].id, one);
  }
  write_text_file(out / "virtual.txt", blocks.str());
  manifest.add_output(out / "virtual.txt");

  const std::vector<std::int32_t> masked = masked_users(data);
  if (masked.size() >= 2) {
    const Matrix truth = withheld_rows(*model, data, masked);
    std::ostringstream t;
    for (std::size_t i = 0; i < masked.size(); ++i) {
      const Matrix one =
          Eigen::Map<const Matrix>(truth.row(static_cast<Index>(i)).data(), n_v, d);
      write_matrix(t, data.users[static_cast<std::size_t>(masked[i])].id, one);
    }
    write_text_file(out / "truth.txt", t.str());
    manifest.add_output(out / "truth.txt");
    const VirtualFidelity f = virtual_fidelity(*model, data, c.train.seed);
    manifest.set("fidelity", {{"users", f.users}, {"mse", f.mse}, {"shuffled_mse", f.shuffled_mse}});
    std::cout << fmt::format("masked users {}: mse {:.6g}, attribute-shuffled mse {:.6g}\n",
                             f.users, f.mse, f.shuffled_mse);
  }
  std::cout << fmt::format("wrote virtual behavior of {} new users\n", users.size());
}

void export_hidden(const Options& o, Manifest& manifest) {
  if (o.limit < 2) throw ConfigError("--limit must be at least 2");
  const Checkpoint ckpt = read_model(o, manifest);
  const Config c = checkpoint_config(ckpt);
  manifest.set_config(to_ini(c));
  manifest.set_seed(c.train.seed);
  manifest.add_input("data", o.data);
  const fs::path out = prepare_out(o.out);
  const Dataset data = load_dataset(c, o.data);
  auto model = load_model(ckpt, data.spec);

  auto head = [&](std::vector<std::int32_t> v) {
    if (static_cast<Index>(v.size()) > o.limit) v.resize(static_cast<std::size_t>(o.limit));
    return v;
  };
  const std::vector<std::int32_t> old = head(old_users(data));
  const std::vector<std::int32_t> fresh = head(new_users(data));
  std::vector<std::int32_t> all = old;
  all.insert(all.end(), fresh.begin(), fresh.end());

  const HiddenFeatures attr = hidden_for(*model, data, all);
  std::ostringstream a;
  write_matrix(a, "attribute_features", attr.attribute_features.value());
  write_matrix(a, "attribute_code", attr.attribute_code.value());
  write_matrix(a, "virtual_behavior", attr.virtual_behavior.value());
  write_text_file(out / "attribute_side.txt", a.str());

  std::string index = "row\tuser_id\tnew_user\n";
  for (std::size_t i = 0; i < all.size(); ++i) {
    index += fmt::format("{}\t{}\t{}\n", i, data.users[static_cast<std::size_t>(all[i])].id,
                         i < old.size() ? 0 : 1);
  }
  write_text_file(out / "users.tsv", index);
  manifest.add_output(out / "attribute_side.txt");
  manifest.add_output(out / "users.tsv");

  if (!old.empty()) {
    const HiddenFeatures beh = hidden_for(*model, data, old);
    std::ostringstream b;
    write_matrix(b, "behavior_features", beh.behavior_features.value());
    write_matrix(b, "behavior_code", beh.behavior_code.value());
    write_text_file(out / "behavior_side.txt", b.str());
    manifest.add_output(out / "behavior_side.txt");
    if (old.size() >= 2) {
      const double m = mmd(beh.attribute_code, beh.behavior_code).item();
      manifest.set("code_mmd", m);
      std::cout << fmt::format("MMD between attribute and behavior codes: {:.6g}\n", m);
    }
  }
  std::cout << fmt::format("wrote hidden features of {} old and {} new users\n", old.size(),
                           fresh.size());
}

void setup_logging() {
  if (!spdlog::get("zsrec")) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("zsrec"));
    spdlog::cfg::load_env_levels();
  }
}

// Failed runs still leave a manifest when the output directory is usable.
void write_manifest(Manifest& manifest, const std::string& out) {
  if (out.empty()) return;
  std::error_code ec;
  fs::create_directories(out, ec);
  try {
    manifest.write(out);
  } catch (const std::exception& e) {
    spdlog::warn("could not write manifest to {}: {}", out, e.what());
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  setup_logging();
  CLI::App app{"Two-tower cold-start recommender: data, training and evaluation", "zsrec"};
  app.footer(kPrecedence);
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic cold-start dataset as TSV files");
  add_config_options(gen, o, true);
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train one variant; writes checkpoints and history.csv");
  add_config_options(tr, o, true);
  tr->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--variant", o.variant, "Variant to train (overrides the config)")
      ->check(CLI::IsMember({"basednn", "none", "single", "dual", "base"}));
  tr->add_option("--out", o.out, "Output directory")->required();

  auto* ev = app.add_subcommand("eval", "AUC/GAUC by cohort for a checkpoint or a score file");
  ev->add_option("--model", o.model, "Checkpoint to score the test split with")
      ->check(CLI::ExistingFile);
  ev->add_option("--data", o.data, "Dataset directory (with --model)")
      ->check(CLI::ExistingDirectory);
  ev->add_option("--scores", o.scores, "Existing score file")->check(CLI::ExistingFile);
  ev->add_option("--baseline", o.baseline, "Score file to compute RI against")
      ->check(CLI::ExistingFile);
  ev->add_option("--cohort", o.cohort, "Restrict output to one cohort")
      ->check(CLI::IsMember({"new", "old", "all"}));
  ev->add_option("--out", o.out, "Output directory")->required();

  auto* ab = app.add_subcommand("ablate", "Train and evaluate the five variants");
  add_config_options(ab, o, true);
  ab->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ab->add_option("--variant", o.variants, "Run only these variants (repeatable)")
      ->check(CLI::IsMember({"basednn", "none", "single", "dual", "base"}))
      ->allow_extra_args(false);
  ab->add_option("--out", o.out, "Output directory")->required();

  auto* xv = app.add_subcommand("export-virtual", "Dump generated behavior of new users");
  xv->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  xv->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  xv->add_option("--out", o.out, "Output directory")->required();

  auto* xh = app.add_subcommand("export-hidden", "Dump hidden features for plotting");
  xh->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  xh->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  xh->add_option("--limit", o.limit, "Users per cohort")->capture_default_str();
  xh->add_option("--out", o.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[config] " << one_line(e.what()) << "\n";
    return exit_code(ErrorKind::kConfig);
  }

  CLI::App* cmd = app.get_subcommands().front();
  std::vector<std::string> argv{"zsrec"};
  argv.insert(argv.end(), args.begin(), args.end());
  Manifest manifest(cmd->get_name(), argv);
  int status = 0;
  try {
    const std::string& name = cmd->get_name();
    if (name == "gen-data") gen_data(o, manifest);
    else if (name == "train") train(o, manifest);
    else if (name == "eval") eval(o, manifest);
    else if (name == "ablate") ablate(o, manifest);
    else if (name == "export-virtual") export_virtual(o, manifest);
    else export_hidden(o, manifest);
    manifest.set("status", "ok");
  } catch (const Error& e) {
    std::cerr << "error[" << error_code(e.kind()) << "] " << one_line(e.what()) << "\n";
    status = exit_code(e.kind());
    manifest.set("status", "error");
    manifest.set("error", {{"kind", error_code(e.kind())}, {"message", e.what()}});
  } catch (const std::exception& e) {
    std::cerr << "error[internal] " << one_line(e.what()) << "\n";
    status = 1;
    manifest.set("status", "error");
    manifest.set("error", {{"kind", "internal"}, {"message", e.what()}});
  }
  manifest.set("exit_code", status);
  write_manifest(manifest, o.out);
  return status;
}

}  // namespace zsrec

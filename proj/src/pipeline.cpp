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

#include "zsrec/pipeline.hpp"

#include <numeric>

#include <spdlog/spdlog.h>

namespace zsrec {

Dataset load_dataset(const Config& config, const std::filesystem::path& dir) {
  Dataset data = ingest(dir, config.ingest_options());
  if (config.data.mask_fraction > 0.0) {
    const Index n = mask_new_users(data, config.data.mask_fraction,
                                   derive_seed(config.train.seed, "mask"));
    spdlog::info("masked behavior of {} users", n);
  }
  return data;
}

CohortReport report_for(const ScoredRows& rows) {
  return cohort_report(rows.scores, rows.labels, rows.users, rows.flags);
}

Evaluation evaluate(MailModel& model, const Dataset& data) {
  Evaluation e;
  e.scored = score_impressions(model, data, data.test, kScoringBatch);
  e.report = report_for(e.scored);
  return e;
}

std::vector<std::int32_t> new_users(const Dataset& data) {
  std::vector<std::int32_t> out;
  for (Index u = 0; u < data.n_users(); ++u) {
    if (data.users[static_cast<std::size_t>(u)].items.empty()) out.push_back(static_cast<std::int32_t>(u));
  }
  return out;
}

std::vector<std::int32_t> old_users(const Dataset& data) {
  std::vector<std::int32_t> out;
  for (Index u = 0; u < data.n_users(); ++u) {
    if (!data.users[static_cast<std::size_t>(u)].items.empty()) out.push_back(static_cast<std::int32_t>(u));
  }
  return out;
}

std::vector<std::int32_t> masked_users(const Dataset& data) {
  std::vector<std::int32_t> out;
  for (Index u = 0; u < data.n_users(); ++u) {
    if (data.has_withheld(u)) out.push_back(static_cast<std::int32_t>(u));
  }
  return out;
}

namespace {

void require_tower(const MailModel& model) {
  if (!model.has_tower()) {
    throw ConfigError(std::string("variant '") + to_string(model.variant()) +
                      "' has no zero-shot tower");
  }
}

// [n x m x d] tensors are stored as n x (m*d) already.
Matrix flatten(const Tensor& t) { return t.value(); }

}  // namespace

Matrix virtual_rows(const MailModel& model, const Dataset& data,
                    const std::vector<std::int32_t>& users) {
  require_tower(model);
  const FeatureBatch batch = assemble_users(data, users);
  if (batch.size() == 0) return Matrix(0, model.tower().behavior_width());
  const Tensor a = embed_attributes(batch, model.tables(), false);
  return flatten(generate_virtual_behavior(a, model.tower()));
}

Matrix withheld_rows(const MailModel& model, const Dataset& data,
                     const std::vector<std::int32_t>& users) {
  const FeatureBatch batch = assemble_users(data, users, BehaviorSource::kWithheld);
  const Index width = data.spec.max_seq_len * data.spec.embedding_dim;
  if (batch.size() == 0) return Matrix(0, width);
  return flatten(embed_behavior(batch, model.tables(), false));
}

VirtualFidelity virtual_fidelity(const MailModel& model, const Dataset& data,
                                 std::uint64_t seed) {
  require_tower(model);
  const std::vector<std::int32_t> users = masked_users(data);
  VirtualFidelity f;
  f.users = static_cast<Index>(users.size());
  if (users.size() < 2) throw DataError("virtual fidelity needs at least 2 masked users");
  const Matrix truth = withheld_rows(model, data, users);
  const Matrix generated = virtual_rows(model, data, users);

  // A plain shuffle; users that keep their own attributes only make the
  // control harder to beat.
  std::vector<std::int32_t> shuffled = users;
  Rng rng(derive_seed(seed, "fidelity"));
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
  }
  const FeatureBatch source = assemble_users(data, shuffled);
  const Tensor a = embed_attributes(source, model.tables(), false);
  const Matrix control = flatten(generate_virtual_behavior(a, model.tower()));

  const double count = static_cast<double>(truth.size());
  f.mse = (generated - truth).squaredNorm() / count;
  f.shuffled_mse = (control - truth).squaredNorm() / count;
  return f;
}

HiddenFeatures hidden_for(const MailModel& model, const Dataset& data,
                          const std::vector<std::int32_t>& users) {
  require_tower(model);
  const FeatureBatch batch = assemble_users(data, users);
  const Tensor a = embed_attributes(batch, model.tables(), false);
  Tensor v;
  if (batch.size() > 0 && batch.count_new() == 0) v = embed_behavior(batch, model.tables(), false);
  return hidden_features(a, v, batch.behavior_mask, model.tower());
}

double code_discrepancy(const MailModel& model, const Dataset& data,
                        const std::vector<std::int32_t>& users) {
  const HiddenFeatures h = hidden_for(model, data, users);
  if (!h.behavior_code.defined()) throw DataError("code discrepancy needs old users only");
  return mmd(h.attribute_code, h.behavior_code).item();
}

}  // namespace zsrec

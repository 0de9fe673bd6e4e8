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

#include "zsrec/features.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

namespace zsrec {

// --- Vocabulary -----------------------------------------------------------------

Vocabulary Vocabulary::build(std::string feature, std::vector<std::string> raw_values) {
  std::sort(raw_values.begin(), raw_values.end());
  raw_values.erase(std::unique(raw_values.begin(), raw_values.end()), raw_values.end());
  Vocabulary vocab(std::move(feature));
  for (auto& raw : raw_values) {
    vocab.insert(raw, vocab.size());
  }
  return vocab;
}

std::int32_t Vocabulary::lookup(const std::string& raw) const {
  auto it = ids_.find(raw);
  return it == ids_.end() ? kPadding : it->second;
}

void Vocabulary::insert(const std::string& raw, std::int32_t id) {
  if (id != size()) {
    throw DataError("vocabulary '" + feature_ + "': id " + std::to_string(id) +
                    " out of sequence, expected " + std::to_string(size()));
  }
  if (!ids_.emplace(raw, id).second) {
    throw DataError("vocabulary '" + feature_ + "': duplicate value '" + raw + "'");
  }
  values_.push_back(raw);
}

Vocabulary& VocabularySet::add(Vocabulary vocab) {
  const std::string name = vocab.feature();
  auto [it, inserted] = vocabs_.insert_or_assign(name, std::move(vocab));
  return it->second;
}

const Vocabulary& VocabularySet::at(const std::string& feature) const {
  auto it = vocabs_.find(feature);
  if (it == vocabs_.end()) throw DataError("no vocabulary for feature '" + feature + "'");
  return it->second;
}

void VocabularySet::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file " + path);
  for (const auto& [name, vocab] : vocabs_) {
    for (std::int32_t id = 1; id < vocab.size(); ++id) {
      out << name << '\t' << vocab.value(id) << '\t' << id << '\n';
    }
  }
}

VocabularySet VocabularySet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary file " + path);
  VocabularySet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    const std::string name = line.substr(0, t1);
    const std::string raw = line.substr(t1 + 1, t2 - t1 - 1);
    std::int32_t id = 0;
    try {
      id = std::stoi(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad id");
    }
    if (!set.contains(name)) set.add(Vocabulary(name));
    set.vocabs_.at(name).insert(raw, id);
  }
  return set;
}

// --- Feature spec ---------------------------------------------------------------

std::string attribute_feature(Index i) { return "attr_" + std::to_string(i + 1); }
std::string context_feature(Index i) { return "ctx_" + std::to_string(i + 1); }
std::string target_feature(Index i) {
  return i == 0 ? std::string(kItemFeature) : "item_" + std::to_string(i + 1);
}

FeatureSpec FeatureSpec::from_vocabularies(const VocabularySet& vocabs, Index n_attributes,
                                           Index n_context, Index n_target, Index embedding_dim,
                                           Index max_seq_len) {
  FeatureSpec spec;
  spec.embedding_dim = embedding_dim;
  spec.max_seq_len = max_seq_len;
  for (Index i = 0; i < n_attributes; ++i) {
    spec.attribute_vocab.push_back(vocabs.at(attribute_feature(i)).size());
  }
  for (Index i = 0; i < n_context; ++i) {
    spec.context_vocab.push_back(vocabs.at(context_feature(i)).size());
  }
  for (Index i = 0; i < n_target; ++i) {
    spec.target_vocab.push_back(vocabs.at(target_feature(i)).size());
  }
  spec.item_vocab = vocabs.at(kItemFeature).size();
  spec.action_vocab = vocabs.at(kActionFeature).size();
  return spec;
}

// --- Batches --------------------------------------------------------------------

std::vector<Index> FeatureBatch::rows_where(bool flag) const {
  std::vector<Index> rows;
  for (Index i = 0; i < size(); ++i) {
    if (flags(i) == flag) rows.push_back(i);
  }
  return rows;
}

FeatureBatch FeatureBatch::select(std::span<const Index> rows) const {
  const Index n = static_cast<Index>(rows.size());
  FeatureBatch out;
  out.attributes.resize(n, attributes.cols());
  out.behavior_items.resize(n, behavior_items.cols());
  out.behavior_actions.resize(n, behavior_actions.cols());
  out.behavior_mask.resize(n, behavior_mask.cols());
  out.context.resize(n, context.cols());
  out.target.resize(n, target.cols());
  out.flags.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Index r = rows[i];
    out.attributes.row(i) = attributes.row(r);
    out.behavior_items.row(i) = behavior_items.row(r);
    out.behavior_actions.row(i) = behavior_actions.row(r);
    out.behavior_mask.row(i) = behavior_mask.row(r);
    out.context.row(i) = context.row(r);
    out.target.row(i) = target.row(r);
    out.labels.push_back(labels[r]);
    out.flags(i) = flags(r);
    out.users.push_back(users[r]);
  }
  return out;
}

bool compute_flag(const Eigen::Ref<const Eigen::Array<bool, 1, Eigen::Dynamic>>& mask_row) {
  return !mask_row.any();
}

FeatureBatch assemble_batch(const Dataset& data, const ImpressionTable& impressions,
                            std::span<const Index> rows, BehaviorSource source) {
  const FeatureSpec& spec = data.spec;
  const Index n = static_cast<Index>(rows.size());
  const Index n_v = spec.max_seq_len;
  FeatureBatch b;
  b.attributes = IdMatrix::Zero(n, spec.n_attributes());
  b.behavior_items = IdMatrix::Zero(n, n_v);
  b.behavior_actions = IdMatrix::Zero(n, n_v);
  b.behavior_mask = Mask::Constant(n, n_v, false);
  b.context.resize(n, spec.n_context());
  b.target.resize(n, spec.n_target());
  b.labels.resize(n);
  b.flags.resize(n);
  b.users.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Index r = rows[i];
    const std::int32_t u = impressions.user[r];
    const UserRecord& user = data.users[u];
    for (Index j = 0; j < spec.n_attributes(); ++j) b.attributes(i, j) = user.attributes[j];
    const bool withheld = source == BehaviorSource::kWithheld;
    const auto& items = withheld ? data.withheld_items[u] : user.items;
    const auto& actions = withheld ? data.withheld_actions[u] : user.actions;
    const Index len = static_cast<Index>(items.size());
    const Index start = std::max<Index>(0, len - n_v);
    for (Index k = start; k < len; ++k) {
      const Index slot = k - start;
      b.behavior_items(i, slot) = items[k];
      b.behavior_actions(i, slot) = actions[k];
      b.behavior_mask(i, slot) = items[k] != Vocabulary::kPadding;
    }
    b.context.row(i) = impressions.context.row(r);
    b.target.row(i) = impressions.target.row(r);
    b.labels[i] = impressions.label[r];
    b.users[i] = u;
    b.flags(i) = compute_flag(b.behavior_mask.row(i));
  }
  return b;
}

FeatureBatch assemble_users(const Dataset& data, std::span<const std::int32_t> users,
                            BehaviorSource source) {
  const Index n = static_cast<Index>(users.size());
  ImpressionTable t;
  t.user.assign(users.begin(), users.end());
  t.day.assign(users.size(), 0);
  t.label.assign(users.size(), 0);
  t.context = IdMatrix::Zero(n, data.spec.n_context());
  t.target = IdMatrix::Zero(n, data.spec.n_target());
  std::vector<Index> rows(users.size());
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return assemble_batch(data, t, rows, source);
}

// --- Embedding tables ------------------------------------------------------------

namespace {

Tensor make_table(Index vocab, Index dim, Rng& rng) {
  Tensor t = xavier_init({std::max<Index>(vocab, 1), dim}, rng);
  t.mutable_value().row(0).setZero();
  return t;
}

}  // namespace

EmbeddingTables::EmbeddingTables(const FeatureSpec& spec, Rng& rng) : dim_(spec.embedding_dim) {
  if (dim_ <= 0) throw ConfigError("embedding dimension must be positive");
  if (spec.n_target() < 1) throw ConfigError("at least one target feature (the item) is required");
  for (Index v : spec.attribute_vocab) attributes_.push_back(make_table(v, dim_, rng));
  item_ = make_table(spec.item_vocab, dim_, rng);
  action_ = make_table(spec.action_vocab, dim_, rng);
  for (Index v : spec.context_vocab) context_.push_back(make_table(v, dim_, rng));
  for (Index i = 1; i < spec.n_target(); ++i) {
    target_extra_.push_back(make_table(spec.target_vocab[i], dim_, rng));
  }
}

std::vector<Tensor> EmbeddingTables::target() const {
  std::vector<Tensor> out{item_};
  out.insert(out.end(), target_extra_.begin(), target_extra_.end());
  return out;
}

std::vector<Parameter> EmbeddingTables::parameters() const {
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    out.push_back({"emb." + attribute_feature(static_cast<Index>(i)), attributes_[i], true});
  }
  out.push_back({std::string("emb.") + kItemFeature, item_, true});
  out.push_back({std::string("emb.") + kActionFeature, action_, true});
  for (std::size_t i = 0; i < context_.size(); ++i) {
    out.push_back({"emb." + context_feature(static_cast<Index>(i)), context_[i], true});
  }
  for (std::size_t i = 0; i < target_extra_.size(); ++i) {
    out.push_back({"emb." + target_feature(static_cast<Index>(i + 1)), target_extra_[i], true});
  }
  return out;
}

namespace {

// Replaces out-of-range IDs with padding.
IdMatrix sanitize(const IdMatrix& ids, std::span<const Tensor> tables, bool one_table,
                  std::int64_t& oov) {
  IdMatrix clean = ids;
  std::int64_t bad = 0;
  for (Index i = 0; i < ids.rows(); ++i) {
    for (Index j = 0; j < ids.cols(); ++j) {
      const Index vocab = tables[one_table ? 0 : j].rows();
      const std::int32_t id = ids(i, j);
      if (id < 0 || id >= vocab) {
        clean(i, j) = Vocabulary::kPadding;
        ++bad;
      }
    }
  }
  if (bad > 0) {
    if (oov == 0) spdlog::warn("{} out-of-vocabulary ids mapped to padding", bad);
    oov += bad;
  }
  return clean;
}

}  // namespace

Tensor lookup_fields(std::span<const Tensor> tables, const IdMatrix& ids, std::int64_t& oov) {
  const Index n = ids.rows(), fields = ids.cols();
  if (static_cast<Index>(tables.size()) != fields) {
    throw ContractError("lookup_fields: " + std::to_string(tables.size()) + " tables for " +
                        std::to_string(fields) + " id columns");
  }
  const Index d = fields == 0 ? 0 : tables[0].cols();
  IdMatrix clean = sanitize(ids, tables, false, oov);
  Matrix out(n, fields * d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < fields; ++j) {
      out.block(i, j * d, 1, d) = tables[j].value().row(clean(i, j));
    }
  }
  std::vector<Tensor> inputs(tables.begin(), tables.end());
  return OpBuilder::make({n, fields, d}, std::move(out), inputs,
                         [inputs, clean = std::move(clean), d](const Matrix& g) {
                           for (Index j = 0; j < clean.cols(); ++j) {
                             const Tensor& table = inputs[j];
                             if (!table.requires_grad()) continue;
                             Matrix& gt = OpBuilder::grad_slot(table);
                             for (Index i = 0; i < clean.rows(); ++i) {
                               const std::int32_t id = clean(i, j);
                               if (id != Vocabulary::kPadding) {
                                 gt.row(id) += g.block(i, j * d, 1, d);
                               }
                             }
                           }
                         });
}

namespace {

Tensor maybe_detach(Tensor t, bool track_grad) { return track_grad ? t : t.detach(); }

}  // namespace

Tensor embed_attributes(const FeatureBatch& batch, const EmbeddingTables& tables,
                        bool track_grad) {
  return maybe_detach(lookup_fields(tables.attributes_, batch.attributes, tables.oov_),
                      track_grad);
}

Tensor embed_context(const FeatureBatch& batch, const EmbeddingTables& tables, bool track_grad) {
  return maybe_detach(lookup_fields(tables.context_, batch.context, tables.oov_), track_grad);
}

Tensor embed_target(const FeatureBatch& batch, const EmbeddingTables& tables, bool track_grad) {
  const std::vector<Tensor> target = tables.target();
  return maybe_detach(lookup_fields(target, batch.target, tables.oov_), track_grad);
}

Tensor embed_behavior(const FeatureBatch& batch, const EmbeddingTables& tables, bool track_grad) {
  const Index n = batch.behavior_items.rows(), m = batch.behavior_items.cols();
  const Index d = tables.dim();
  const Tensor item = tables.item_;
  const Tensor action = tables.action_;
  if (batch.behavior_actions.rows() != n || batch.behavior_actions.cols() != m) {
    throw ContractError("embed_behavior: item and action id arrays differ in shape");
  }
  const Tensor one_item[] = {item};
  const Tensor one_action[] = {action};
  IdMatrix items = sanitize(batch.behavior_items, one_item, true, tables.oov_);
  IdMatrix actions = sanitize(batch.behavior_actions, one_action, true, tables.oov_);
  // Slots the mask marks as padding stay exactly zero whatever their IDs say.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (!batch.behavior_mask(i, j)) items(i, j) = Vocabulary::kPadding;
    }
  }
  Matrix out = Matrix::Zero(n, m * d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (items(i, j) == Vocabulary::kPadding) continue;
      out.block(i, j * d, 1, d) =
          item.value().row(items(i, j)).cwiseProduct(action.value().row(actions(i, j)));
    }
  }
  if (!track_grad) return Tensor({n, m, d}, std::move(out));
  return OpBuilder::make(
      {n, m, d}, std::move(out), {item, action},
      [item, action, items = std::move(items), actions = std::move(actions), d](const Matrix& g) {
        Matrix* gi = item.requires_grad() ? &OpBuilder::grad_slot(item) : nullptr;
        Matrix* ga = action.requires_grad() ? &OpBuilder::grad_slot(action) : nullptr;
        for (Index i = 0; i < items.rows(); ++i) {
          for (Index j = 0; j < items.cols(); ++j) {
            const std::int32_t it = items(i, j);
            if (it == Vocabulary::kPadding) continue;
            const std::int32_t ac = actions(i, j);
            const auto gs = g.block(i, j * d, 1, d);
            if (gi) gi->row(it) += gs.cwiseProduct(action.value().row(ac));
            if (ga && ac != Vocabulary::kPadding) {
              ga->row(ac) += gs.cwiseProduct(item.value().row(it));
            }
          }
        }
      });
}

}  // namespace zsrec

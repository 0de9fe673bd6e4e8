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
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace zsrec {

// Contiguous IDs for one categorical feature. ID 0 is reserved for padding
// and for values never seen while the vocabulary was built.
class Vocabulary {
 public:
  static constexpr std::int32_t kPadding = 0;

  Vocabulary() : values_{std::string()} {}
  explicit Vocabulary(std::string feature) : feature_(std::move(feature)), values_{std::string()} {}

  // Assigns IDs in lexicographic order of the distinct values.
  static Vocabulary build(std::string feature, std::vector<std::string> raw_values);

  const std::string& feature() const { return feature_; }
  std::int32_t size() const { return static_cast<std::int32_t>(values_.size()); }
  // kPadding for unknown values.
  std::int32_t lookup(const std::string& raw) const;
  bool contains(const std::string& raw) const { return ids_.count(raw) != 0; }
  const std::string& value(std::int32_t id) const { return values_.at(id); }

  // Used when loading a frozen vocabulary file; IDs must arrive densely.
  void insert(const std::string& raw, std::int32_t id);

 private:
  std::string feature_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::vector<std::string> values_;
};

// All vocabularies of a dataset, keyed by feature name.
class VocabularySet {
 public:
  Vocabulary& add(Vocabulary vocab);
  const Vocabulary& at(const std::string& feature) const;
  bool contains(const std::string& feature) const { return vocabs_.count(feature) != 0; }
  const std::map<std::string, Vocabulary>& all() const { return vocabs_; }

  // "feature<TAB>raw_value<TAB>id" per line, padding rows omitted.
  void save(const std::string& path) const;
  static VocabularySet load(const std::string& path);

 private:
  std::map<std::string, Vocabulary> vocabs_;
};

}  // namespace zsrec

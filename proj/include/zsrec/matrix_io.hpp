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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "zsrec/tensor.hpp"
#include "zsrec/trainer.hpp"

namespace zsrec {

// Plain-text matrix block: a "rows cols name" header line followed by one
// space-separated line per row. Values use 17 significant digits so they
// read back exactly.
void write_matrix(std::ostream& out, const std::string& name, const Matrix& m);
// Reads the next block; throws DataError on malformed input.
Matrix read_matrix(std::istream& in, std::string& name);
std::vector<std::pair<std::string, Matrix>> read_matrices(const std::filesystem::path& path);

// Score file: TSV with header row, user, new_user, label, score.
void write_scores(const std::filesystem::path& path, const ScoredRows& rows,
                  const std::vector<std::string>& user_ids);
struct ScoreFile {
  std::vector<std::string> user_ids;
  ScoredRows rows;  // users index into user_ids
};
ScoreFile read_scores(const std::filesystem::path& path);

// Writes `text` to a temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace zsrec

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

#include "zsrec/matrix_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace zsrec {

void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << fmt::format("{} {} {}\n", m.rows(), m.cols(), name);
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ' ';
      line += fmt::format("{:.17g}", m(i, j));
    }
    line += '\n';
    out << line;
  }
}

Matrix read_matrix(std::istream& in, std::string& name) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("matrix: missing header");
  std::istringstream h(header);
  Index rows = -1;
  Index cols = -1;
  if (!(h >> rows >> cols) || rows < 0 || cols < 0) {
    throw DataError("matrix: malformed header '" + header + "'");
  }
  std::getline(h >> std::ws, name);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw DataError(fmt::format("matrix '{}': expected {}x{} values", name, rows, cols));
      }
    }
  }
  in >> std::ws;
  return m;
}

std::vector<std::pair<std::string, Matrix>> read_matrices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::pair<std::string, Matrix>> out;
  in >> std::ws;
  while (in.peek() != std::char_traits<char>::eof()) {
    std::string name;
    Matrix m = read_matrix(in, name);
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

void write_scores(const std::filesystem::path& path, const ScoredRows& rows,
                  const std::vector<std::string>& user_ids) {
  std::string text = "row\tuser\tnew_user\tlabel\tscore\n";
  for (std::size_t i = 0; i < rows.scores.size(); ++i) {
    text += fmt::format("{}\t{}\t{}\t{}\t{:.17g}\n", i,
                        user_ids.at(static_cast<std::size_t>(rows.users[i])),
                        rows.flags[i] ? 1 : 0, rows.labels[i], rows.scores[i]);
  }
  write_text_file(path, text);
}

ScoreFile read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "row\tuser\tnew_user\tlabel\tscore") {
    throw DataError(path.string() + ":1: not a score file");
  }
  ScoreFile out;
  std::map<std::string, std::int32_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id;
    std::string user;
    int flag = 0;
    int label = 0;
    double score = 0.0;
    if (!std::getline(row, id, '\t') || !std::getline(row, user, '\t') ||
        !(row >> flag >> label >> score) || (flag != 0 && flag != 1)) {
      throw DataError(fmt::format("{}:{}: malformed score row", path.string(), lineno));
    }
    auto [it, added] = index.emplace(user, static_cast<std::int32_t>(out.user_ids.size()));
    if (added) out.user_ids.push_back(user);
    out.rows.users.push_back(it->second);
    out.rows.flags.push_back(flag == 1);
    out.rows.labels.push_back(label);
    out.rows.scores.push_back(score);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace zsrec

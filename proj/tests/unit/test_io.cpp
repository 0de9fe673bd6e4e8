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
#include <filesystem>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "zsrec/errors.hpp"
#include "zsrec/manifest.hpp"
#include "zsrec/matrix_io.hpp"

namespace zsrec {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("zsrec_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(MatrixIo, RoundTripIsBitExact) {
  Matrix m(3, 4);
  m << 0.1, -0.0, 1e-300, 1.0 / 3.0, std::numeric_limits<double>::max(), -2.5, 7.0,
      std::numeric_limits<double>::denorm_min(), 123456789.123456789, -1e-17, 0.0, 42.0;
  Matrix empty(0, 5);
  std::stringstream s;
  write_matrix(s, "first", m);
  write_matrix(s, "second", empty);
  std::string name;
  const Matrix back = read_matrix(s, name);
  EXPECT_EQ(name, "first");
  ASSERT_EQ(back.rows(), 3);
  ASSERT_EQ(back.cols(), 4);
  for (Index i = 0; i < m.size(); ++i) {
    EXPECT_EQ(std::signbit(back.data()[i]), std::signbit(m.data()[i]));
    EXPECT_EQ(back.data()[i], m.data()[i]) << i;
  }
  const Matrix back2 = read_matrix(s, name);
  EXPECT_EQ(name, "second");
  EXPECT_EQ(back2.rows(), 0);
  EXPECT_EQ(back2.cols(), 5);
}

TEST(MatrixIo, MalformedBlocksAreDataErrors) {
  std::string name;
  std::stringstream short_row("2 2 m\n1 2\n3\n");
  EXPECT_THROW(read_matrix(short_row, name), DataError);
  std::stringstream bad_value("1 2 m\n1 x\n");
  EXPECT_THROW(read_matrix(bad_value, name), DataError);
  std::stringstream bad_header("two 2 m\n");
  EXPECT_THROW(read_matrix(bad_header, name), DataError);
}

TEST(MatrixIo, ReadMatricesReadsAllBlocks) {
  const fs::path dir = fresh_dir("blocks");
  std::ostringstream s;
  write_matrix(s, "a", Matrix::Constant(2, 2, 1.5));
  write_matrix(s, "b", Matrix::Constant(1, 3, -1.0));
  write_text_file(dir / "m.txt", s.str());
  const auto blocks = read_matrices(dir / "m.txt");
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0].first, "a");
  EXPECT_EQ(blocks[1].second, Matrix::Constant(1, 3, -1.0));
}

TEST(ScoreFile, RoundTrip) {
  const fs::path dir = fresh_dir("scores");
  ScoredRows rows;
  rows.scores = {0.25, 1.0 / 3.0, 0.9};
  rows.flags = {false, true, false};
  rows.labels = {0, 1, 1};
  rows.users = {1, 0, 1};
  write_scores(dir / "s.tsv", rows, {"alice", "bob"});
  const ScoreFile back = read_scores(dir / "s.tsv");
  EXPECT_EQ(back.rows.scores, rows.scores);
  EXPECT_EQ(back.rows.flags, rows.flags);
  EXPECT_EQ(back.rows.labels, rows.labels);
  ASSERT_EQ(back.rows.users.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string want = rows.users[i] == 0 ? "alice" : "bob";
    EXPECT_EQ(back.user_ids[static_cast<std::size_t>(back.rows.users[i])], want);
  }
}

TEST(ScoreFile, BadHeaderIsDataError) {
  const fs::path dir = fresh_dir("bad_scores");
  write_text_file(dir / "s.tsv", "user\tscore\nu\t0.5\n");
  EXPECT_THROW(read_scores(dir / "s.tsv"), DataError);
}

TEST(TextFile, RoundTripAndMissingFile) {
  const fs::path dir = fresh_dir("text");
  const std::string text = std::string("line one\nline two\n") + '\0' + "tail";
  write_text_file(dir / "t.bin", text);
  EXPECT_EQ(read_text_file(dir / "t.bin"), text);
  EXPECT_THROW(read_text_file(dir / "missing"), DataError);
}

TEST(Manifest, BlobHashesMatchGit) {
  // Values printed by `git hash-object`.
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Manifest, DirectoryHashTracksContentNotLocation) {
  const fs::path a = fresh_dir("hash_a"), b = fresh_dir("hash_b");
  for (const fs::path& d : {a, b}) {
    fs::create_directories(d / "sub");
    write_text_file(d / "x.tsv", "1\n");
    write_text_file(d / "sub" / "y.tsv", "2\n");
  }
  EXPECT_EQ(content_hash(a), content_hash(b));
  EXPECT_EQ(content_hash(a / "x.tsv"), git_blob_sha1("1\n"));
  write_text_file(b / "sub" / "y.tsv", "3\n");
  EXPECT_NE(content_hash(a), content_hash(b));
  EXPECT_THROW(content_hash(a / "missing"), DataError);
}

TEST(Manifest, WritesRecordWithHashesAndTimings) {
  const fs::path dir = fresh_dir("manifest");
  write_text_file(dir / "in.txt", "input");
  write_text_file(dir / "out.txt", "output");
  Manifest m("train", {"zsrec", "train"});
  m.set_config("[train]\nseed = 5\n");
  m.set_seed(5);
  m.add_input("data", dir / "in.txt");
  m.add_output(dir / "out.txt");
  m.mark("work");
  m.write(dir);
  const auto j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  EXPECT_EQ(j["command"], "train");
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["inputs"][0]["role"], "data");
  EXPECT_EQ(j["inputs"][0]["sha1"], git_blob_sha1("input"));
  EXPECT_EQ(j["outputs"][0]["path"], "out.txt");
  EXPECT_EQ(j["outputs"][0]["sha1"], git_blob_sha1("output"));
  EXPECT_TRUE(j["timings"].contains("work"));
  EXPECT_GE(j["timings"]["total"].get<double>(), j["timings"]["work"].get<double>());
}

}  // namespace
}  // namespace zsrec

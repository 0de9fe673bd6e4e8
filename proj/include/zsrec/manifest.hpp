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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace zsrec {

// SHA-1 of "blob <size>\0" + bytes, as `git hash-object` prints it.
std::string git_blob_sha1(std::string_view bytes);
// Blob hash of a file. For a directory, the SHA-1 of one
// "<blob hash> <relative path>\n" line per regular file in path order.
std::string content_hash(const std::filesystem::path& path);

// Run record written as manifest.json next to a command's artifacts.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv);

  void set_config(const std::string& ini_text);
  void set_seed(std::optional<std::uint64_t> seed);
  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  // Wall time since construction or since the previous mark.
  void mark(const std::string& phase);
  void set(const std::string& key, nlohmann::json value);

  const nlohmann::json& json() const { return json_; }
  void write(const std::filesystem::path& dir);

 private:
  nlohmann::json json_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace zsrec

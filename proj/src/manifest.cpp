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

#include "zsrec/manifest.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "zsrec/errors.hpp"
#include "zsrec/matrix_io.hpp"

namespace zsrec {

namespace {

std::string sha1_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw ContractError("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

double seconds(std::chrono::steady_clock::duration d) {
  return std::chrono::duration<double>(d).count();
}

}  // namespace

std::string git_blob_sha1(std::string_view bytes) {
  std::string data = fmt::format("blob {}", bytes.size());
  data.push_back('\0');
  data.append(bytes);
  return sha1_hex(data);
}

std::string content_hash(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(path)) return git_blob_sha1(read_text_file(path));
  if (!fs::is_directory(path)) throw DataError("cannot hash missing path " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), path));
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const fs::path& f : files) {
    listing += git_blob_sha1(read_text_file(path / f)) + " " + f.generic_string() + "\n";
  }
  return sha1_hex(listing);
}

Manifest::Manifest(std::string command, std::vector<std::string> argv)
    : start_(std::chrono::steady_clock::now()), last_(start_) {
  json_["command"] = std::move(command);
  json_["argv"] = std::move(argv);
  json_["inputs"] = nlohmann::json::array();
  json_["outputs"] = nlohmann::json::array();
  json_["timings"] = nlohmann::json::object();
  json_["seed"] = nullptr;
}

void Manifest::set_config(const std::string& ini_text) { json_["config"] = ini_text; }

void Manifest::set_seed(std::optional<std::uint64_t> seed) {
  json_["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  json_["inputs"].push_back(
      {{"role", role}, {"path", path.string()}, {"sha1", content_hash(path)}});
}

void Manifest::add_output(const std::filesystem::path& path) {
  json_["outputs"].push_back(
      {{"path", path.filename().string()}, {"sha1", content_hash(path)}});
}

void Manifest::mark(const std::string& phase) {
  const auto now = std::chrono::steady_clock::now();
  json_["timings"][phase] = seconds(now - last_);
  last_ = now;
}

void Manifest::set(const std::string& key, nlohmann::json value) { json_[key] = std::move(value); }

void Manifest::write(const std::filesystem::path& dir) {
  json_["timings"]["total"] = seconds(std::chrono::steady_clock::now() - start_);
  write_text_file(dir / "manifest.json", json_.dump(2) + "\n");
}

}  // namespace zsrec

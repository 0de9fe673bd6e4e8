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

#include "zsrec/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <fmt/format.h>

namespace zsrec {

namespace {

constexpr char kMagic[8] = {'Z', 'S', 'R', 'E', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void name(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw DataError(fmt::format("checkpoint {} is truncated", path_));
    }
  }
  std::string string(std::uint64_t n) {
    if (n > (std::uint64_t{1} << 32)) throw DataError(fmt::format("checkpoint {} is corrupt", path_));
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const TensorRecord& r : tensors) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    Writer w(out);
    w.bytes(kMagic, sizeof(kMagic));
    w.pod(kCheckpointVersion);
    w.pod(static_cast<std::uint64_t>(ckpt.text.size()));
    for (const auto& [name, text] : ckpt.text) {
      w.name(name);
      w.pod(static_cast<std::uint64_t>(text.size()));
      w.bytes(text.data(), text.size());
    }
    w.pod(static_cast<std::uint64_t>(ckpt.tensors.size()));
    for (const TensorRecord& r : ckpt.tensors) {
      if (numel(r.shape) != r.values.size()) {
        throw ContractError(fmt::format("checkpoint record {}: shape {} holds {} values", r.name,
                                        to_string(r.shape), r.values.size()));
      }
      w.name(r.name);
      w.pod(static_cast<std::uint32_t>(r.shape.size()));
      for (Index d : r.shape) w.pod(static_cast<std::int64_t>(d));
      w.bytes(r.values.data(), sizeof(double) * static_cast<std::size_t>(r.values.size()));
    }
    if (!out) throw DataError("write failed for checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(fmt::format("{} is not a checkpoint file", path.string()));
  }
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError(fmt::format("checkpoint {} has version {}, expected {}", path.string(), version,
                                kCheckpointVersion));
  }
  Checkpoint ckpt;
  const auto n_text = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_text; ++i) {
    std::string name = r.string(r.pod<std::uint32_t>());
    std::string text = r.string(r.pod<std::uint64_t>());
    ckpt.text.emplace(std::move(name), std::move(text));
  }
  const auto n_tensor = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_tensor; ++i) {
    TensorRecord rec;
    rec.name = r.string(r.pod<std::uint32_t>());
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 8) throw DataError(fmt::format("checkpoint record {} has rank {}", rec.name, rank));
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.pod<std::int64_t>();
      if (d < 0) throw DataError(fmt::format("checkpoint record {} has a negative dimension", rec.name));
      rec.shape.push_back(d);
    }
    const Index total = numel(rec.shape);
    const Index rows = rec.shape.empty() ? 1 : rec.shape[0];
    const Index cols = rows == 0 ? 0 : total / rows;
    rec.values.resize(rows, cols);
    r.bytes(rec.values.data(), sizeof(double) * static_cast<std::size_t>(total));
    ckpt.tensors.push_back(std::move(rec));
  }
  return ckpt;
}

}  // namespace zsrec

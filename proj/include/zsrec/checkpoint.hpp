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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zsrec/tensor.hpp"

namespace zsrec {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  Shape shape;
  Matrix values;
};

// Binary layout (host byte order):
//   "ZSRECKPT" u32 version
//   u64 n_text   { u32 len name, u64 len text }*
//   u64 n_tensor { u32 len name, u32 rank, i64 dims[rank], f64 values[numel] }*
struct Checkpoint {
  std::map<std::string, std::string> text;
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const;
};

// Writes to a temporary file and renames it into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws DataError on a missing file, bad magic, unknown version or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace zsrec

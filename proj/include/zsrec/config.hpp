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
#include <string>
#include <vector>

#include "zsrec/dataio.hpp"
#include "zsrec/ops.hpp"

namespace zsrec {

// Training variants compared in the ablation study.
enum class Variant {
  kBaseDnn,  // ranking tower alone, new users see an empty sequence
  kNone,     // untrained linear attribute -> behavior map
  kSingle,   // tower trained with L_a
  kDual,     // L_a + L_v
  kBase,     // L_a + L_v + L_d
};

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();

struct ModelConfig {
  Index embedding_dim = 32;
  Index max_seq_len = 100;
  // 0 means "same as embedding_dim".
  Index attention_dim = 0;
  std::vector<Index> encoder_widths{1024, 512};
  Index hidden_dim = 512;
  std::vector<Index> decoder_widths{512, 1024};
  std::vector<Index> mlp_widths{512, 256};
  double dropout = 0.5;
  double leaky_slope = kDefaultLeakySlope;
};

struct TrainConfig {
  double learning_rate = 0.001;
  Index batch_size = 1024;
  std::int32_t epochs = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  Variant variant = Variant::kBase;
  // Keep ranking-loss gradients out of the zero-shot tower.
  bool detach_virtual = true;
};

struct DataConfig {
  std::int32_t train_days = 7;
  // Extra masking applied when ingesting data that was not generated masked.
  double mask_fraction = 0.0;
  double max_reject_fraction = 0.01;
  SyntheticConfig synthetic;
};

struct Config {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;

  // Throws ConfigError on values outside their domain.
  void validate() const;
  IngestOptions ingest_options() const;
};

// INI text with [model], [train] and [data] sections. Keys missing from the
// text keep their defaults; unknown keys and sections are errors.
Config parse_config(const std::string& text, const std::string& origin = "<config>");
Config load_config(const std::filesystem::path& path);

// `key=value` where key is "section.name" or a bare name that exists in
// exactly one section.
void apply_override(Config& config, const std::string& assignment);

// Every key, in a fixed order; parse_config(to_ini(c)) == c.
std::string to_ini(const Config& config);

}  // namespace zsrec

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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "zsrec/checkpoint.hpp"
#include "zsrec/config.hpp"

namespace zsrec {
namespace {

TEST(Config, DefaultsMatchPublishedSettings) {
  const Config c;
  EXPECT_EQ(c.train.learning_rate, 0.001);
  EXPECT_EQ(c.model.embedding_dim, 32);
  EXPECT_EQ(c.train.batch_size, 1024);
  EXPECT_EQ(c.model.dropout, 0.5);
  EXPECT_EQ(c.model.max_seq_len, 100);
  EXPECT_EQ(c.train.beta1, 0.9);
  EXPECT_EQ(c.train.beta2, 0.999);
  EXPECT_EQ(c.train.variant, Variant::kBase);
  EXPECT_TRUE(c.train.detach_virtual);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, IniRoundTripsEveryField) {
  Config c;
  c.model.encoder_widths = {64, 32};
  c.model.leaky_slope = 0.1;
  c.train.learning_rate = 0.0123456789012345;
  c.train.seed = 18446744073709551615ull;
  c.train.variant = Variant::kDual;
  c.train.detach_virtual = false;
  c.data.synthetic.attribute_signal = 1.0 / 3.0;
  const std::string text = to_ini(c);
  const Config back = parse_config(text);
  EXPECT_EQ(to_ini(back), text);
  EXPECT_EQ(back.train.learning_rate, c.train.learning_rate);
  EXPECT_EQ(back.train.seed, c.train.seed);
  EXPECT_EQ(back.data.synthetic.attribute_signal, c.data.synthetic.attribute_signal);
  EXPECT_EQ(back.model.encoder_widths, c.model.encoder_widths);
  EXPECT_EQ(back.train.variant, Variant::kDual);
  EXPECT_FALSE(back.train.detach_virtual);
}

TEST(Config, MissingKeysKeepDefaults) {
  const Config c = parse_config("[train]\nepochs = 3\n");
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.train.batch_size, 1024);
}

TEST(Config, UnknownKeyIsError) {
  EXPECT_THROW(parse_config("[train]\nlearning_rte = 0.1\n"), ConfigError);
}

TEST(Config, UnknownSectionIsError) {
  EXPECT_THROW(parse_config("[optim]\nlearning_rate = 0.1\n"), ConfigError);
}

TEST(Config, KeyOutsideSectionIsError) {
  EXPECT_THROW(parse_config("epochs = 3\n"), ConfigError);
}

TEST(Config, MalformedValuesAreErrors) {
  EXPECT_THROW(parse_config("[train]\nepochs = three\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nlearning_rate = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\ndetach_virtual = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nvariant = mail\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nencoder_widths = 64,,32\n"), ConfigError);
}

TEST(Config, ValidateRejectsOutOfDomainValues) {
  Config c;
  c.model.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = Config{};
  c.train.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = Config{};
  c.model.encoder_widths = {8};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, OverridesAcceptQualifiedAndBareKeys) {
  Config c = parse_config("[train]\nepochs = 3\n");
  apply_override(c, "train.epochs=7");
  EXPECT_EQ(c.train.epochs, 7);
  apply_override(c, "batch_size=64");
  EXPECT_EQ(c.train.batch_size, 64);
  apply_override(c, "model.mlp_widths=16-8");
  EXPECT_EQ(c.model.mlp_widths, (std::vector<Index>{16, 8}));
}

TEST(Config, BadOverridesAreErrors) {
  Config c;
  EXPECT_THROW(apply_override(c, "epochs"), ConfigError);
  EXPECT_THROW(apply_override(c, "train.epoch=2"), ConfigError);
  EXPECT_THROW(apply_override(c, "nonsense=2"), ConfigError);
}

TEST(Config, VariantNamesRoundTrip) {
  ASSERT_EQ(all_variants().size(), 5u);
  for (Variant v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
}

TEST(Config, LoadConfigReadsFile) {
  const auto path = std::filesystem::temp_directory_path() / "zsrec_config_test.ini";
  {
    std::ofstream out(path);
    out << "[model]\nembedding_dim = 8\n";
  }
  EXPECT_EQ(load_config(path).model.embedding_dim, 8);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), ConfigError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Checkpoint c;
  c.text["config"] = "[train]\nepochs = 1\n";
  c.text["empty"] = "";
  Matrix m(2, 3);
  m << 1.0 / 3.0, -0.0, 1e-310, 5e300, -2.5, 7.0;
  c.tensors.push_back({"a", {2, 3}, m});
  c.tensors.push_back({"s", {}, Matrix::Constant(1, 1, 42.0)});
  c.tensors.push_back({"none", {0, 4}, Matrix(0, 4)});
  const auto path = std::filesystem::temp_directory_path() / "zsrec_ckpt_test.bin";
  save_checkpoint(c, path);
  const Checkpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.text, c.text);
  ASSERT_EQ(back.tensors.size(), 3u);
  const TensorRecord* a = back.find("a");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->shape, (Shape{2, 3}));
  ASSERT_EQ(a->values.size(), 6);
  EXPECT_EQ(std::memcmp(a->values.data(), m.data(), sizeof(double) * 6), 0);
  EXPECT_EQ(back.find("s")->values(0, 0), 42.0);
  EXPECT_EQ(back.find("none")->values.size(), 0);
  EXPECT_EQ(back.find("missing"), nullptr);
}

TEST(Checkpoint, BadMagicAndTruncationAreDataErrors) {
  const auto path = std::filesystem::temp_directory_path() / "zsrec_ckpt_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACKPT\x01\x00\x00\x00";
  }
  EXPECT_THROW(load_checkpoint(path), DataError);

  Checkpoint c;
  c.tensors.push_back({"a", {4}, Matrix::Ones(4, 1)});
  save_checkpoint(c, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 8);
  EXPECT_THROW(load_checkpoint(path), DataError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), DataError);
}

}  // namespace
}  // namespace zsrec

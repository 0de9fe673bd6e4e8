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

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "zsrec/ranktower.hpp"

namespace zsrec {
namespace {

using testing::check_gradients;

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (Index i = 0; i < t.numel(); ++i) t.mutable_value().data()[i] = rng.uniform(-1, 1);
  return t;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(SumPool, SingletonAndCancellation) {
  Tensor one = Tensor::from_values({1, 1, 3}, {1.5, -2.0, 0.25});
  EXPECT_EQ(sum_pool(one).value(), one.value());
  Tensor pair = Tensor::from_values({1, 2, 2}, {0.3, -0.7, -0.3, 0.7});
  EXPECT_EQ(sum_pool(pair).value().squaredNorm(), 0.0);
}

TEST(SumPool, MatchesLoopOracle) {
  Rng rng(1);
  Tensor s = random_tensor({2, 3, 2}, rng);
  Tensor out = sum_pool(s);
  for (Index i = 0; i < 2; ++i) {
    for (Index c = 0; c < 2; ++c) {
      double acc = 0.0;
      for (Index j = 0; j < 3; ++j) acc += s.value()(i, j * 2 + c);
      EXPECT_NEAR(out.value()(i, c), acc, 1e-15);
    }
  }
}

TEST(GateInput, IdentityCases) {
  Rng rng(2);
  Tensor real = random_tensor({3, 2, 2}, rng);
  Tensor virt = random_tensor({3, 2, 2}, rng);
  FlagVector none = FlagVector::Constant(3, false);
  FlagVector all = FlagVector::Constant(3, true);
  EXPECT_EQ(gate_input(none, real, Tensor()).value(), real.value());
  EXPECT_EQ(gate_input(all, real, virt).value(), virt.value());
}

TEST(GateInput, MixedRowsFollowFlags) {
  Rng rng(3);
  Tensor real = random_tensor({5, 2, 3}, rng);
  FlagVector flags(5);
  flags << true, false, false, true, false;
  Tensor virt = random_tensor({2, 2, 3}, rng);
  Tensor out = gate_input(flags, real, virt);
  Index k = 0;
  for (Index i = 0; i < 5; ++i) {
    if (flags(i)) {
      EXPECT_EQ(out.value().row(i), virt.value().row(k++));
    } else {
      // Old users always keep their own behavior.
      EXPECT_EQ(out.value().row(i), real.value().row(i));
    }
  }
}

TEST(GateInput, MissingVirtualRowNamesTheRow) {
  Rng rng(4);
  Tensor real = random_tensor({3, 1, 2}, rng);
  FlagVector flags(3);
  flags << true, false, true;
  Tensor virt = random_tensor({1, 1, 2}, rng);
  try {
    gate_input(flags, real, virt);
    FAIL() << "expected a contract error";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(BaseDNN, OneUnitHandForward) {
  Rng rng(5);
  BaseDNN model(MlpConfig{{1}, 0.5, 0.01});
  model.build(1, rng);
  model.dense_layers()[0].weight.mutable_value()(0, 0) = 2.0;
  model.dense_layers()[0].bias.mutable_value()(0, 0) = -1.0;
  BatchNorm& bn = model.norm_layers()[0];
  bn.gamma.mutable_value()(0, 0) = 1.5;
  bn.beta.mutable_value()(0, 0) = 0.2;
  bn.state.running_mean(0) = 0.1;
  bn.state.running_var(0) = 4.0;
  model.output_layer().weight.mutable_value()(0, 0) = -0.7;
  model.output_layer().bias.mutable_value()(0, 0) = 0.3;

  Tensor z = Tensor::from_values({2, 1}, {0.25, 0.9});
  Tensor y = model.forward(z, false, rng);
  for (Index i = 0; i < 2; ++i) {
    const double x = z.value()(i, 0);
    double h = 2.0 * x - 1.0;
    h = 1.5 * (h - 0.1) / std::sqrt(4.0 + 1e-5) + 0.2;
    h = h > 0 ? h : 0.01 * h;
    EXPECT_NEAR(y.value()(i, 0), sigmoid_ref(-0.7 * h + 0.3), 1e-15);
  }
}

TEST(BaseDNN, OutputsInUnitIntervalAndDeterministic) {
  Rng rng(6);
  BaseDNN model(MlpConfig{{8, 4}, 0.5, 0.01});
  model.build(12, rng);
  Tensor z = random_tensor({10, 12}, rng);
  Tensor a = model.forward(z, false, rng);
  Tensor b = model.forward(z, false, rng);
  EXPECT_EQ(a.value(), b.value());
  EXPECT_EQ(a.shape(), (Shape{10}));
  for (Index i = 0; i < 10; ++i) {
    EXPECT_GT(a.value()(i, 0), 0.0);
    EXPECT_LT(a.value()(i, 0), 1.0);
  }
}

TEST(BaseDNN, WidthMismatchIsConfigError) {
  Rng rng(7);
  BaseDNN model(MlpConfig{{4}, 0.5, 0.01});
  model.build(8, rng);
  EXPECT_THROW(model.forward(random_tensor({2, 6}, rng), false, rng), ConfigError);
}

TEST(BaseDNN, InferenceRowsAreIndependent) {
  Rng rng(8);
  BaseDNN model(MlpConfig{{6, 3}, 0.5, 0.01});
  model.build(5, rng);
  Tensor z = random_tensor({4, 5}, rng);
  Tensor all = model.forward(z, false, rng);
  std::vector<Index> row{2};
  Tensor alone = model.forward(gather_rows(z, row), false, rng);
  EXPECT_EQ(alone.value()(0, 0), all.value()(2, 0));
}

std::vector<std::pair<std::string, Tensor>> named(const std::vector<Parameter>& ps) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const Parameter& p : ps) out.emplace_back(p.name, p.tensor);
  return out;
}

TEST(BaseDNN, LossGradientMatchesFiniteDifferencesFrozen) {
  Rng rng(9);
  BaseDNN model(MlpConfig{{5, 3}, 0.5, 0.01});
  model.build(4, rng);
  for (BatchNorm& bn : model.norm_layers()) {
    for (Index c = 0; c < bn.state.running_mean.size(); ++c) {
      bn.state.running_mean(c) = rng.uniform(-0.2, 0.2);
      bn.state.running_var(c) = rng.uniform(0.5, 2.0);
    }
  }
  Tensor z = random_tensor({6, 4}, rng, true);
  std::vector<int> labels{1, 0, 0, 1, 1, 0};
  auto loss = [&] { return bce_loss(model.forward(z, false, rng), labels); };
  backward(loss());
  auto params = named(model.parameters());
  params.emplace_back("z", z);
  auto r = check_gradients(params, [&] { return loss().item(); });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(BaseDNN, LossGradientMatchesFiniteDifferencesBatchStatistics) {
  Rng rng(10);
  BaseDNN model(MlpConfig{{5, 3}, 0.0, 0.01});
  model.build(4, rng);
  Tensor z = random_tensor({6, 4}, rng, true);
  std::vector<int> labels{1, 0, 0, 1, 1, 0};
  auto loss = [&] { return bce_loss(model.forward(z, true, rng), labels); };
  backward(loss());
  auto params = named(model.parameters());
  params.emplace_back("z", z);
  auto r = check_gradients(params, [&] { return loss().item(); });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(BaseDNN, PooledInputIsSlotPermutationInvariant) {
  Rng rng(11);
  BaseDNN model(MlpConfig{{6}, 0.5, 0.01});
  model.build(4 * 2, rng);
  RankingInputs in{random_tensor({3, 2, 2}, rng), random_tensor({3, 4, 2}, rng),
                   random_tensor({3, 1, 2}, rng), random_tensor({3, 2, 2}, rng)};
  Tensor before = model.predict(in, false, rng);
  // Reverse the behavior slots of every row.
  Matrix reversed = in.behavior.value();
  for (Index j = 0; j < 4; ++j) {
    reversed.middleCols(j * 2, 2) = in.behavior.value().middleCols((3 - j) * 2, 2);
  }
  in.behavior = Tensor(in.behavior.shape(), reversed);
  Tensor after = model.predict(in, false, rng);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(after.value()(i, 0), before.value()(i, 0), 1e-15);
}

TEST(BaseDNN, PooledLayoutIsBehaviorAttributesContextTarget) {
  RankingInputs in{Tensor::from_values({1, 1, 1}, {2.0}), Tensor::from_values({1, 2, 1}, {1.0, 3.0}),
                   Tensor::from_values({1, 1, 1}, {5.0}), Tensor::from_values({1, 2, 1}, {7.0, 1.0})};
  EXPECT_EQ(pool_inputs(in).value(), (Matrix(1, 4) << 4.0, 2.0, 5.0, 8.0).finished());
}

TEST(Bce, HalfGivesLnTwo) {
  Tensor p = Tensor::from_values({4}, {0.5, 0.5, 0.5, 0.5});
  EXPECT_NEAR(bce_loss(p, {0, 1, 1, 0}).item(), std::log(2.0), 1e-15);
}

TEST(Bce, PerfectPredictionIsNearZero) {
  Tensor p = Tensor::from_values({3}, {1.0, 0.0, 1.0});
  EXPECT_LE(bce_loss(p, {1, 0, 1}).item(), 1e-6);
}

TEST(Bce, ThreeRowHandCase) {
  Tensor p = Tensor::from_values({3}, {0.9, 0.2, 0.6});
  const double expected = -(std::log(0.9) + std::log(0.8) + std::log(0.4)) / 3.0;
  EXPECT_NEAR(bce_loss(p, {1, 0, 0}).item(), expected, 1e-15);
}

TEST(Bce, RejectsNonBinaryLabels) {
  Tensor p = Tensor::from_values({2}, {0.3, 0.4});
  EXPECT_THROW(bce_loss(p, {1, 2}), DataError);
}

TEST(Bce, GradientMatchesClosedForm) {
  Tensor p = Tensor::from_values({2}, {0.3, 0.8}, true);
  backward(bce_loss(p, {1, 0}));
  EXPECT_NEAR(p.grad()(0, 0), -1.0 / 0.3 / 2.0, 1e-15);
  EXPECT_NEAR(p.grad()(1, 0), 1.0 / 0.2 / 2.0, 1e-12);
}

}  // namespace
}  // namespace zsrec

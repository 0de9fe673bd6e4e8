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
#include <numeric>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "zsrec/nn.hpp"
#include "zsrec/ops.hpp"

namespace zsrec {
namespace {

using testing::check_gradients;

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (Index i = 0; i < t.numel(); ++i) t.mutable_value().data()[i] = rng.uniform(-scale, scale);
  return t;
}

// Reference product, accumulated left to right over the inner index.
Matrix triple_loop(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Index p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
      out(i, j) = acc;
    }
  }
  return out;
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Rng rng(1);
  Tensor a = random_tensor({3, 3}, rng, false);
  Tensor eye(Shape{3, 3}, Matrix::Identity(3, 3));
  EXPECT_EQ(matmul(eye, a).value(), a.value());
}

TEST(Matmul, HandSum) {
  Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_values({2, 1}, {1, 1});
  Tensor c = matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c.value()(0, 0), 3.0);
  EXPECT_EQ(c.value()(1, 0), 7.0);
}

TEST(Matmul, MatchesTripleLoopExactlyOnSmallShapes) {
  Rng rng(7);
  for (Index m = 1; m <= 8; ++m) {
    for (Index k = 1; k <= 8; ++k) {
      for (Index n = 1; n <= 8; ++n) {
        Tensor a = random_tensor({m, k}, rng, false);
        Tensor b = random_tensor({k, n}, rng, false);
        ASSERT_EQ(matmul(a, b).value(), triple_loop(a.value(), b.value()))
            << m << "x" << k << "x" << n;
      }
    }
  }
}

TEST(Matmul, LargeShapesAgreeWithOracle) {
  Rng rng(8);
  Tensor a = random_tensor({40, 60}, rng, false);
  Tensor b = random_tensor({60, 30}, rng, false);
  EXPECT_TRUE(matmul(a, b).value().isApprox(triple_loop(a.value(), b.value()), 1e-12));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 2});
  try {
    matmul(a, b);
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x2]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor w = random_tensor({3, 2}, rng, false);
  auto loss = [&] { return sum(mul(matmul(a, b), w)); };
  backward(loss());
  auto r = check_gradients({{"a", a}, {"b", b}}, [&] { return loss().item(); });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Activation, ClosedFormValues) {
  EXPECT_EQ(sigmoid(Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor::scalar(-1.0), 0.01).item(), -0.01);
  EXPECT_EQ(leaky_relu(Tensor::scalar(2.0), 0.01).item(), 2.0);
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor::scalar(-1.0), 0.2).item(), -0.2);
}

TEST(Activation, TanhGradientAtZeroIsOne) {
  Tensor x(Shape{}, Matrix::Zero(1, 1), true);
  backward(tanh(x));
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 1.0);
  const double h = 1e-5;
  const double fd = (std::tanh(h) - std::tanh(-h)) / (2 * h);
  EXPECT_NEAR(x.grad()(0, 0), fd, 1e-6);
}

TEST(Activation, GradientsMatchFiniteDifferences) {
  Rng rng(11);
  for (Activation kind : {Activation::kLeakyRelu, Activation::kTanh, Activation::kSigmoid}) {
    Tensor x = random_tensor({4, 5}, rng);
    // Keep LeakyReLU inputs away from the kink.
    for (Index i = 0; i < x.numel(); ++i) {
      double& v = x.mutable_value().data()[i];
      if (std::abs(v) < 0.05) v += 0.1;
    }
    Tensor w = random_tensor({4, 5}, rng, false);
    auto loss = [&] { return sum(mul(activation(x, kind, 0.01), w)); };
    backward(loss());
    auto r = check_gradients({{"x", x}}, [&] { return loss().item(); });
    EXPECT_LT(r.max_rel_error, 1e-4) << static_cast<int>(kind) << " " << r.worst;
  }
}

TEST(Softmax, UniformAndClosedForm) {
  Tensor y = softmax(Tensor::from_values({3}, {2.5, 2.5, 2.5}));
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(y.value()(i, 0), 1.0 / 3.0, 1e-15);
  Tensor z = softmax(Tensor::from_values({2}, {std::log(2.0), 0.0}));
  EXPECT_NEAR(z.value()(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(z.value()(1, 0), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MaskedEntryMatchesReducedSoftmax) {
  Mask mask(1, 3);
  mask << true, true, false;
  Tensor y = softmax(Tensor::from_values({3}, {5, 1, 9}), mask);
  Tensor ref = softmax(Tensor::from_values({2}, {5, 1}));
  EXPECT_DOUBLE_EQ(y.value()(0, 0), ref.value()(0, 0));
  EXPECT_DOUBLE_EQ(y.value()(1, 0), ref.value()(1, 0));
  EXPECT_EQ(y.value()(2, 0), 0.0);
}

TEST(Softmax, AllMaskedRowIsAnError) {
  Mask mask = Mask::Constant(1, 2, false);
  EXPECT_THROW(softmax(Tensor::from_values({2}, {1, 2}), mask), ContractError);
}

TEST(Softmax, PropertiesOnRandomRows) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Index width = 1 + static_cast<Index>(rng.below(12));
    Tensor e = random_tensor({2, width}, rng, false, 20.0);
    Mask mask(2, width);
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(0.7);
    mask(0, rng.below(width)) = true;
    mask(1, rng.below(width)) = true;
    Tensor y = softmax(e, mask);
    Tensor shifted = e.detach();
    shifted.mutable_value().array() += 3.75;
    Tensor ys = softmax(shifted, mask);
    for (Index i = 0; i < 2; ++i) {
      EXPECT_NEAR(y.value().row(i).sum(), 1.0, 1e-12);
      for (Index j = 0; j < width; ++j) {
        EXPECT_GE(y.value()(i, j), 0.0);
        if (!mask(i, j)) {
          EXPECT_EQ(y.value()(i, j), 0.0);
        }
        EXPECT_NEAR(y.value()(i, j), ys.value()(i, j), 1e-12);
      }
    }
  }
}

TEST(Softmax, GradientMatchesFiniteDifferences) {
  Rng rng(9);
  Tensor e = random_tensor({3, 4}, rng);
  Mask mask = Mask::Constant(3, 4, true);
  mask(1, 2) = false;
  mask(2, 0) = false;
  Tensor w = random_tensor({3, 4}, rng, false);
  auto loss = [&] { return sum(mul(softmax(e, mask), w)); };
  backward(loss());
  auto r = check_gradients({{"e", e}}, [&] { return loss().item(); });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Dropout, InferenceAndZeroRateAreIdentity) {
  Rng rng(1);
  Tensor x = random_tensor({4, 4}, rng, false);
  EXPECT_EQ(dropout(x, 0.5, false, rng).value(), x.value());
  EXPECT_EQ(dropout(x, 0.0, true, rng).value(), x.value());
}

TEST(Dropout, RateHalfPreservesMean) {
  Rng rng(2);
  Tensor x(Shape{100000}, Matrix::Ones(100000, 1));
  Tensor y = dropout(x, 0.5, true, rng);
  EXPECT_NEAR(y.value().mean(), 1.0, 0.01);
  const Index zeros = (y.value().array() == 0.0).count();
  EXPECT_NEAR(static_cast<double>(zeros) / 100000.0, 0.5, 0.01);
}

TEST(Dropout, RateOfOneIsConfigError) {
  Rng rng(1);
  Tensor x = Tensor::zeros({2, 2});
  EXPECT_THROW(dropout(x, 1.0, true, rng), ConfigError);
  EXPECT_THROW(dropout(x, -0.1, true, rng), ConfigError);
}

TEST(BatchNorm, NormalisedColumnIsFixedPoint) {
  // Column with mean 0 and (biased) variance 1.
  Tensor x = Tensor::from_values({4, 1}, {1, -1, 1, -1});
  BatchNorm bn = BatchNorm::init(1);
  Tensor y = bn(x, true);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(y.value()(i, 0), x.value()(i, 0), 1e-4);
}

TEST(BatchNorm, ConstantColumnMapsToShift) {
  Tensor x = Tensor::from_values({3, 1}, {4, 4, 4});
  BatchNorm bn = BatchNorm::init(1);
  bn.beta.mutable_value()(0, 0) = 0.25;
  Tensor y = bn(x, true);
  for (Index i = 0; i < 3; ++i) EXPECT_EQ(y.value()(i, 0), 0.25);
}

TEST(BatchNorm, TrainingOutputIsStandardised) {
  Rng rng(4);
  // Spread wide enough that epsilon / var stays below 1e-6.
  Tensor x = random_tensor({50, 6}, rng, false, 20.0);
  x.mutable_value().array() += 3.0;
  BatchNorm bn = BatchNorm::init(6);
  Tensor y = bn(x, true);
  for (Index j = 0; j < 6; ++j) {
    const double in_mu = x.value().col(j).mean();
    const double in_var = (x.value().col(j).array() - in_mu).square().mean();
    const double mu = y.value().col(j).mean();
    const double var = (y.value().col(j).array() - mu).square().mean();
    EXPECT_NEAR(mu, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-6);
    EXPECT_NEAR(var, in_var / (in_var + 1e-5), 1e-12);
  }
  // Running statistics moved toward the batch statistics.
  EXPECT_GT(bn.state.running_mean(0), 0.1);
}

TEST(BatchNorm, SingleRowTrainingBatchIsRejected) {
  BatchNorm bn = BatchNorm::init(2);
  EXPECT_THROW(bn(Tensor::zeros({1, 2}), true), ContractError);
  EXPECT_NO_THROW(bn(Tensor::zeros({1, 2}), false));
}

TEST(BatchNorm, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (bool training : {true, false}) {
    Tensor x = random_tensor({6, 3}, rng);
    BatchNorm bn = BatchNorm::init(3);
    bn.gamma.mutable_value() << 1.5, 0.5, -1.0;
    bn.beta.mutable_value() << 0.1, 0.2, 0.3;
    bn.state.running_mean << 0.1, -0.2, 0.05;
    bn.state.running_var << 0.8, 1.3, 0.6;
    Tensor w = random_tensor({6, 3}, rng, false);
    // Freeze the running statistics so repeated evaluation is pure.
    const BatchNormState frozen = bn.state;
    auto loss = [&] {
      bn.state = frozen;
      return sum(mul(bn(x, training), w));
    };
    backward(loss());
    auto r = check_gradients({{"x", x}, {"gamma", bn.gamma}, {"beta", bn.beta}},
                             [&] { return loss().item(); });
    EXPECT_LT(r.max_rel_error, 1e-4) << "training=" << training << " " << r.worst;
  }
}

TEST(Backward, LinearAndQuadraticClosedForms) {
  Tensor x = Tensor::from_values({2}, {1, -2}, true);
  backward(sum(x));
  EXPECT_EQ(x.grad()(0, 0), 1.0);
  EXPECT_EQ(x.grad()(1, 0), 1.0);
  x.zero_grad();
  backward(sum(mul(x, x)));
  EXPECT_EQ(x.grad()(0, 0), 2.0);
  EXPECT_EQ(x.grad()(1, 0), -4.0);
}

TEST(Backward, AccumulatesAcrossCallsUntilReset) {
  Tensor x = Tensor::from_values({2}, {1, -2}, true);
  Tensor loss = sum(mul(x, x));
  backward(loss);
  backward(loss);
  EXPECT_EQ(x.grad()(1, 0), -8.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()(1, 0), 0.0);
}

TEST(Backward, NonScalarLossIsContractError) {
  Tensor x = Tensor::zeros({2}, true);
  EXPECT_THROW(backward(scale(x, 2.0)), ContractError);
}

TEST(Backward, TopologicalOrderPutsInputsFirst) {
  Rng rng(1);
  Tensor a = random_tensor({2, 2}, rng);
  Tensor b = random_tensor({2, 2}, rng);
  Tensor c = add(matmul(a, b), a);
  Tensor loss = sum(mul(c, c));
  auto order = topological_order(loss);
  ASSERT_EQ(order.size(), 6u);
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_LT(order[i - 1].id(), order[i].id());
  EXPECT_TRUE(order.back().same_node(loss));
}

TEST(CompositeOps, GradientsMatchFiniteDifferences) {
  Rng rng(21);
  Tensor x = random_tensor({4, 3}, rng);
  Tensor w = random_tensor({3, 5}, rng);
  Tensor b = random_tensor({5}, rng);
  Tensor extra = random_tensor({4, 2}, rng);
  Tensor slots = random_tensor({4, 3, 2}, rng);
  Tensor alt = random_tensor({2, 2}, rng);
  Tensor target = random_tensor({4, 7}, rng, false);
  const bool pick[] = {false, true, false, true};
  const Index rows[] = {3, 0, 3};
  auto loss = [&] {
    Tensor h = leaky_relu(linear(x, w, b));
    Tensor wide = concat_cols(h, extra);
    Tensor err = squared_error(wide, target);
    Tensor att = softmax(reshape(matmul(x, Tensor(Shape{3, 3}, Matrix::Identity(3, 3))), {4, 3}));
    Tensor pooled = weighted_sum_slots(att, slots);
    Tensor gated = select_rows(pooled, alt, pick);
    Tensor picked = gather_rows(sum_slots(slots), rows);
    return add(add(err, sum(mul(gated, gated))), mean(picked));
  };
  backward(loss());
  auto r = check_gradients(
      {{"x", x}, {"w", w}, {"b", b}, {"extra", extra}, {"slots", slots}, {"alt", alt}},
      [&] { return loss().item(); });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(SelectRows, MissingAlternativeRowIsNamed) {
  Tensor primary = Tensor::zeros({3, 2});
  Tensor alt = Tensor::zeros({1, 2});
  const bool pick[] = {true, false, true};
  try {
    select_rows(primary, alt, pick);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Tensor w = Tensor::from_values({3}, {0.5, -1.0, 2.0}, true);
  Adam opt({{"w", w}}, 0.01);
  w.mutable_grad() << 3.0, -0.2, 1e-3;
  const Matrix before = w.value();
  opt.step();
  EXPECT_NEAR(w.value()(0, 0) - before(0, 0), -0.01, 1e-6);
  EXPECT_NEAR(w.value()(1, 0) - before(1, 0), 0.01, 1e-6);
  EXPECT_NEAR(w.value()(2, 0) - before(2, 0), -0.01, 1e-6);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  Tensor w = Tensor::from_values({2}, {0.5, -1.0}, true);
  Adam opt({{"w", w}}, 0.01);
  const Matrix before = w.value();
  for (int i = 0; i < 10; ++i) {
    w.mutable_grad().setZero();
    opt.step();
  }
  EXPECT_EQ(w.value(), before);
  EXPECT_EQ(opt.state().step, 10);
}

TEST(Adam, ConvergesOnQuadraticLikeScalarRecursion) {
  Tensor w = Tensor::from_values({1}, {0.0}, true);
  Adam opt({{"w", w}}, 0.1);
  // Independent scalar Adam recursion.
  double ref = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 200; ++t) {
    opt.zero_grad();
    Tensor diff = sub(w, Tensor::from_values({1}, {3.0}));
    backward(sum(mul(diff, diff)));
    opt.step();
    const double g = 2.0 * (ref - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_LT(std::abs(w.value()(0, 0) - 3.0), 0.05);
  EXPECT_NEAR(w.value()(0, 0), ref, 1e-12);
}

TEST(Adam, NonFiniteGradientAborts) {
  Tensor w = Tensor::from_values({2}, {0.5, -1.0}, true);
  Adam opt({{"w", w}}, 0.01);
  w.mutable_grad() << std::nan(""), 0.0;
  const Matrix before = w.value();
  EXPECT_THROW(opt.step(), NumericError);
  EXPECT_EQ(w.value(), before);
}

TEST(Adam, FrozenFirstRowNeverMoves) {
  Tensor table = Tensor::from_values({2, 2}, {0, 0, 1, 1}, true);
  Adam opt({{"table", table, true}}, 0.1);
  table.mutable_grad().setOnes();
  opt.step();
  EXPECT_EQ(table.value().row(0).squaredNorm(), 0.0);
  EXPECT_NE(table.value()(1, 0), 1.0);
}

TEST(Xavier, SupportMeanAndDeterminism) {
  Rng rng(42);
  Tensor w = xavier_init({100, 100}, rng);
  const double bound = std::sqrt(6.0 / 200.0);
  EXPECT_LE(w.value().cwiseAbs().maxCoeff(), bound);
  EXPECT_NEAR(w.value().mean(), 0.0, 0.01);
  Rng again(42);
  EXPECT_EQ(xavier_init({100, 100}, again).value(), w.value());
  EXPECT_THROW(xavier_init({0, 3}, rng), ConfigError);
  EXPECT_THROW(xavier_init({3}, rng), ConfigError);
}

}  // namespace
}  // namespace zsrec

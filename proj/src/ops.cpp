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

#include "zsrec/ops.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace zsrec {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                        " vs " + to_string(b.shape()));
  }
}

void require_rank(const Tensor& t, Index rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    std::ostringstream os;
    os << op << ": " << what << " must be rank " << rank << ", got " << to_string(t.shape());
    throw ContractError(os.str());
  }
}

// Products up to this many multiply-adds use the reference loop.
constexpr Index kSmallProduct = 4096;

}  // namespace

// --- RNG ----------------------------------------------------------------------

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  // Box-Muller; one draw per call keeps the stream position simple.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double p = uniform();
  while (p > limit) {
    ++k;
    p *= uniform();
  }
  return k;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  // FNV-1a over the stream name, mixed with splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// --- Linear algebra -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul", "lhs");
  require_rank(b, 2, "matmul", "rhs");
  if (a.dim(1) != b.dim(0)) {
    throw ContractError("matmul: inner dimensions differ, " + to_string(a.shape()) + " * " +
                        to_string(b.shape()));
  }
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Matrix out(m, n);
  if (m * k * n <= kSmallProduct) {
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        double acc = 0.0;
        for (Index p = 0; p < k; ++p) acc += A(i, p) * B(p, j);
        out(i, j) = acc;
      }
    }
  } else {
    out.noalias() = a.value() * b.value();
  }
  return OpBuilder::make({m, n}, std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) OpBuilder::accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) OpBuilder::accumulate(b, a.value().transpose() * g);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  if (x.dim(1) != weight.dim(0) || bias.numel() != weight.dim(1)) {
    throw ContractError("linear: input " + to_string(x.shape()) + ", weight " +
                        to_string(weight.shape()) + ", bias " + to_string(bias.shape()));
  }
  Matrix out(x.dim(0), weight.dim(1));
  out.noalias() = x.value() * weight.value();
  const auto b = Eigen::Map<const RowVector>(bias.value().data(), bias.numel());
  out.rowwise() += b;
  return OpBuilder::make({x.dim(0), weight.dim(1)}, std::move(out), {x, weight, bias},
                         [x, weight, bias](const Matrix& g) {
                           if (x.requires_grad()) {
                             OpBuilder::accumulate(x, g * weight.value().transpose());
                           }
                           if (weight.requires_grad()) {
                             OpBuilder::grad_slot(weight).noalias() += x.value().transpose() * g;
                           }
                           if (bias.requires_grad()) {
                             Matrix& gb = OpBuilder::grad_slot(bias);
                             Eigen::Map<RowVector>(gb.data(), gb.size()) += g.colwise().sum();
                           }
                         });
}

// --- Elementwise --------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return OpBuilder::make(a.shape(), a.value() + b.value(), {a, b}, [a, b](const Matrix& g) {
    OpBuilder::accumulate(a, g);
    OpBuilder::accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return OpBuilder::make(a.shape(), a.value() - b.value(), {a, b}, [a, b](const Matrix& g) {
    OpBuilder::accumulate(a, g);
    OpBuilder::accumulate(b, -g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return OpBuilder::make(a.shape(), std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) OpBuilder::accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) OpBuilder::accumulate(b, g.cwiseProduct(a.value()));
  });
}

Tensor scale(const Tensor& x, double factor) {
  return OpBuilder::make(x.shape(), x.value() * factor, {x},
                         [x, factor](const Matrix& g) { OpBuilder::accumulate(x, g * factor); });
}

Tensor activation(const Tensor& x, Activation kind, double leaky_slope) {
  const auto in = x.value().array();
  Matrix out;
  switch (kind) {
    case Activation::kLeakyRelu:
      out = (in > 0.0).select(in, in * leaky_slope).matrix();
      break;
    case Activation::kTanh:
      out = in.tanh().matrix();
      break;
    case Activation::kSigmoid:
      out = (1.0 / (1.0 + (-in).exp())).matrix();
      break;
  }
  // The backward closure keeps only what it needs: the input for LeakyReLU,
  // the output for tanh and sigmoid.
  switch (kind) {
    case Activation::kLeakyRelu:
      return OpBuilder::make(x.shape(), std::move(out), {x}, [x, leaky_slope](const Matrix& g) {
        const auto in = x.value().array();
        OpBuilder::accumulate(x, (in > 0.0).select(g.array(), g.array() * leaky_slope).matrix());
      });
    case Activation::kTanh: {
      auto y = std::make_shared<Matrix>(out);
      return OpBuilder::make(x.shape(), std::move(out), {x}, [x, y](const Matrix& g) {
        OpBuilder::accumulate(x, (g.array() * (1.0 - y->array().square())).matrix());
      });
    }
    case Activation::kSigmoid: {
      auto y = std::make_shared<Matrix>(out);
      return OpBuilder::make(x.shape(), std::move(out), {x}, [x, y](const Matrix& g) {
        OpBuilder::accumulate(x, (g.array() * y->array() * (1.0 - y->array())).matrix());
      });
    }
  }
  throw ContractError("activation: unknown kind");
}

// --- Reductions and shape -----------------------------------------------------

Tensor sum(const Tensor& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return OpBuilder::make({}, std::move(out), {x}, [x](const Matrix& g) {
    OpBuilder::grad_slot(x).array() += g(0, 0);
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ContractError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  const Index rows = shape.empty() ? 1 : shape[0];
  const Index cols = rows == 0 ? 0 : numel(shape) / rows;
  Matrix out = Eigen::Map<const Matrix>(x.value().data(), rows, cols);
  return OpBuilder::make(std::move(shape), std::move(out), {x}, [x](const Matrix& g) {
    OpBuilder::accumulate(x, Eigen::Map<const Matrix>(g.data(), x.rows(), x.cols()));
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_cols", "lhs");
  require_rank(b, 2, "concat_cols", "rhs");
  if (a.dim(0) != b.dim(0)) {
    throw ContractError("concat_cols: row mismatch " + to_string(a.shape()) + " vs " +
                        to_string(b.shape()));
  }
  const Index p = a.dim(1), q = b.dim(1);
  Matrix out(a.dim(0), p + q);
  out.leftCols(p) = a.value();
  out.rightCols(q) = b.value();
  return OpBuilder::make({a.dim(0), p + q}, std::move(out), {a, b}, [a, b, p, q](const Matrix& g) {
    if (a.requires_grad()) OpBuilder::accumulate(a, g.leftCols(p));
    if (b.requires_grad()) OpBuilder::accumulate(b, g.rightCols(q));
  });
}

Tensor sum_slots(const Tensor& slots) {
  require_rank(slots, 3, "sum_slots", "slots");
  const Index n = slots.dim(0), m = slots.dim(1), d = slots.dim(2);
  Matrix out = Matrix::Zero(n, d);
  const Matrix& v = slots.value();
  for (Index j = 0; j < m; ++j) out += v.middleCols(j * d, d);
  return OpBuilder::make({n, d}, std::move(out), {slots}, [slots, m, d](const Matrix& g) {
    Matrix& gs = OpBuilder::grad_slot(slots);
    for (Index j = 0; j < m; ++j) gs.middleCols(j * d, d) += g;
  });
}

Tensor weighted_sum_slots(const Tensor& weights, const Tensor& slots) {
  require_rank(slots, 3, "weighted_sum_slots", "slots");
  const Index n = slots.dim(0), m = slots.dim(1), d = slots.dim(2);
  if (weights.shape() != Shape{n, m}) {
    throw ContractError("weighted_sum_slots: weights " + to_string(weights.shape()) +
                        " do not match slots " + to_string(slots.shape()));
  }
  const Matrix& w = weights.value();
  const Matrix& v = slots.value();
  Matrix out = Matrix::Zero(n, d);
  for (Index j = 0; j < m; ++j) {
    out.array() += v.middleCols(j * d, d).array().colwise() * w.col(j).array();
  }
  return OpBuilder::make({n, d}, std::move(out), {weights, slots},
                         [weights, slots, m, d](const Matrix& g) {
                           const Matrix& w = weights.value();
                           const Matrix& v = slots.value();
                           if (weights.requires_grad()) {
                             Matrix& gw = OpBuilder::grad_slot(weights);
                             for (Index j = 0; j < m; ++j) {
                               gw.col(j) += v.middleCols(j * d, d).cwiseProduct(g).rowwise().sum();
                             }
                           }
                           if (slots.requires_grad()) {
                             Matrix& gs = OpBuilder::grad_slot(slots);
                             for (Index j = 0; j < m; ++j) {
                               gs.middleCols(j * d, d).array() += g.array().colwise() * w.col(j).array();
                             }
                           }
                         });
}

Tensor squared_error(const Tensor& prediction, const Tensor& target) {
  if (prediction.numel() != target.numel() || prediction.rows() != target.rows()) {
    throw ContractError("squared_error: " + to_string(prediction.shape()) + " vs " +
                        to_string(target.shape()));
  }
  const Index n = prediction.rows();
  if (n == 0) throw ContractError("squared_error: empty batch");
  Matrix diff = prediction.value() - target.value();
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / static_cast<double>(n);
  auto saved = std::make_shared<Matrix>(std::move(diff));
  return OpBuilder::make({}, std::move(out), {prediction, target},
                         [prediction, target, saved, n](const Matrix& g) {
                           const double c = 2.0 * g(0, 0) / static_cast<double>(n);
                           OpBuilder::accumulate(prediction, *saved * c);
                           OpBuilder::accumulate(target, *saved * -c);
                         });
}

// --- Softmax ------------------------------------------------------------------

Tensor softmax(const Tensor& logits, const Mask& mask) {
  const Index width = logits.rank() <= 1 ? logits.numel() : logits.shape().back();
  const Index rows = width == 0 ? 0 : logits.numel() / width;
  if (mask.rows() != rows || mask.cols() != width) {
    std::ostringstream os;
    os << "softmax: mask " << mask.rows() << 'x' << mask.cols() << " does not match logits "
       << to_string(logits.shape());
    throw ContractError(os.str());
  }
  const auto e = Eigen::Map<const Matrix>(logits.value().data(), rows, width);
  Matrix y = Matrix::Zero(rows, width);
  for (Index i = 0; i < rows; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < width; ++j) {
      if (mask(i, j)) hi = std::max(hi, e(i, j));
    }
    if (hi == -std::numeric_limits<double>::infinity()) {
      throw ContractError("softmax: row " + std::to_string(i) + " has no unmasked entry");
    }
    double total = 0.0;
    for (Index j = 0; j < width; ++j) {
      if (mask(i, j)) {
        y(i, j) = std::exp(e(i, j) - hi);
        total += y(i, j);
      }
    }
    y.row(i) /= total;
  }
  Matrix out = Eigen::Map<const Matrix>(y.data(), logits.rows(), logits.cols());
  auto saved = std::make_shared<Matrix>(std::move(y));
  return OpBuilder::make(logits.shape(), std::move(out), {logits},
                         [logits, saved, rows, width](const Matrix& g) {
                           const auto gy = Eigen::Map<const Matrix>(g.data(), rows, width);
                           const Matrix& y = *saved;
                           // Masked entries have y == 0, so they receive zero.
                           Matrix gx = y.cwiseProduct(gy);
                           const Eigen::VectorXd dots = gx.rowwise().sum();
                           gx -= (y.array().colwise() * dots.array()).matrix();
                           OpBuilder::accumulate(logits, Eigen::Map<const Matrix>(
                                                             gx.data(), logits.rows(), logits.cols()));
                         });
}

Tensor softmax(const Tensor& logits) {
  const Index width = logits.rank() <= 1 ? logits.numel() : logits.shape().back();
  const Index rows = width == 0 ? 0 : logits.numel() / width;
  return softmax(logits, Mask::Constant(rows, width, true));
}

// --- Dropout ------------------------------------------------------------------

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto keep = std::make_shared<Matrix>(x.rows(), x.cols());
  double* k = keep->data();
  for (Index i = 0; i < keep->size(); ++i) k[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  Matrix out = x.value().cwiseProduct(*keep);
  return OpBuilder::make(x.shape(), std::move(out), {x}, [x, keep](const Matrix& g) {
    OpBuilder::accumulate(x, g.cwiseProduct(*keep));
  });
}

// --- Batch norm ---------------------------------------------------------------

BatchNormState BatchNormState::fresh(Index width) {
  BatchNormState s;
  s.running_mean = RowVector::Zero(width);
  s.running_var = RowVector::Ones(width);
  return s;
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, bool training) {
  require_rank(x, 2, "batch_norm", "input");
  const Index n = x.dim(0), d = x.dim(1);
  if (gamma.numel() != d || beta.numel() != d || state.running_mean.size() != d) {
    throw ContractError("batch_norm: width mismatch for input " + to_string(x.shape()));
  }
  if (training && n < 2) {
    throw ContractError("batch_norm: training batch needs at least 2 rows, got " +
                        std::to_string(n));
  }
  const auto gam = Eigen::Map<const RowVector>(gamma.value().data(), d);
  const auto bet = Eigen::Map<const RowVector>(beta.value().data(), d);
  RowVector mu, var;
  if (training) {
    mu = x.value().colwise().mean();
    var = (x.value().rowwise() - mu).array().square().colwise().mean().matrix();
    state.running_mean = state.momentum * state.running_mean + (1.0 - state.momentum) * mu;
    state.running_var = state.momentum * state.running_var + (1.0 - state.momentum) * var;
  } else {
    mu = state.running_mean;
    var = state.running_var;
  }
  const RowVector inv_std = (var.array() + state.epsilon).rsqrt().matrix();
  auto x_hat = std::make_shared<Matrix>((x.value().rowwise() - mu).array().rowwise() *
                                        inv_std.array());
  Matrix out = (x_hat->array().rowwise() * gam.array()).rowwise() + bet.array();
  return OpBuilder::make(
      {n, d}, std::move(out), {x, gamma, beta},
      [x, gamma, beta, x_hat, inv_std, training, n, d](const Matrix& g) {
        const auto gam = Eigen::Map<const RowVector>(gamma.value().data(), d);
        if (gamma.requires_grad()) {
          Matrix& gg = OpBuilder::grad_slot(gamma);
          Eigen::Map<RowVector>(gg.data(), d) += g.cwiseProduct(*x_hat).colwise().sum();
        }
        if (beta.requires_grad()) {
          Matrix& gb = OpBuilder::grad_slot(beta);
          Eigen::Map<RowVector>(gb.data(), d) += g.colwise().sum();
        }
        if (!x.requires_grad()) return;
        const Matrix g_hat = g.array().rowwise() * gam.array();
        if (!training) {
          OpBuilder::accumulate(x, (g_hat.array().rowwise() * inv_std.array()).matrix());
          return;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        const RowVector sum_g = g_hat.colwise().sum();
        const RowVector sum_gx = g_hat.cwiseProduct(*x_hat).colwise().sum();
        Matrix gx = (g_hat.array().rowwise() - sum_g.array() * inv_n) -
                    x_hat->array().rowwise() * (sum_gx.array() * inv_n);
        gx.array().rowwise() *= inv_std.array();
        OpBuilder::accumulate(x, gx);
      });
}

// --- Misc ---------------------------------------------------------------------

Tensor select_rows(const Tensor& primary, const Tensor& alternative,
                   std::span<const bool> use_alternative) {
  const Index n = primary.rows();
  if (static_cast<Index>(use_alternative.size()) != n) {
    throw ContractError("select_rows: " + std::to_string(use_alternative.size()) +
                        " selectors for " + std::to_string(n) + " rows");
  }
  if (alternative.defined() && alternative.rows() > 0 && alternative.cols() != primary.cols()) {
    throw ContractError("select_rows: row width mismatch " + to_string(primary.shape()) + " vs " +
                        to_string(alternative.shape()));
  }
  const Index available = alternative.defined() ? alternative.rows() : 0;
  std::vector<Index> source(n, -1);
  Index next = 0;
  for (Index i = 0; i < n; ++i) {
    if (!use_alternative[i]) continue;
    if (next >= available) {
      throw ContractError("select_rows: no alternative row for row " + std::to_string(i));
    }
    source[i] = next++;
  }
  Matrix out = primary.value();
  for (Index i = 0; i < n; ++i) {
    if (source[i] >= 0) out.row(i) = alternative.value().row(source[i]);
  }
  std::vector<Tensor> inputs{primary};
  if (alternative.defined()) inputs.push_back(alternative);
  return OpBuilder::make(primary.shape(), std::move(out), inputs,
                         [primary, alternative, source](const Matrix& g) {
                           if (primary.requires_grad()) {
                             Matrix& gp = OpBuilder::grad_slot(primary);
                             for (Index i = 0; i < g.rows(); ++i) {
                               if (source[i] < 0) gp.row(i) += g.row(i);
                             }
                           }
                           if (alternative.requires_grad()) {
                             Matrix& ga = OpBuilder::grad_slot(alternative);
                             for (Index i = 0; i < g.rows(); ++i) {
                               if (source[i] >= 0) ga.row(source[i]) += g.row(i);
                             }
                           }
                         });
}

Tensor gather_rows(const Tensor& x, std::span<const Index> rows) {
  const Index n = static_cast<Index>(rows.size());
  Matrix out(n, x.cols());
  for (Index i = 0; i < n; ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) {
      throw ContractError("gather_rows: row " + std::to_string(rows[i]) + " out of range");
    }
    out.row(i) = x.value().row(rows[i]);
  }
  Shape shape = x.shape();
  if (shape.empty()) shape = {1};
  shape[0] = n;
  std::vector<Index> idx(rows.begin(), rows.end());
  return OpBuilder::make(std::move(shape), std::move(out), {x}, [x, idx](const Matrix& g) {
    Matrix& gx = OpBuilder::grad_slot(x);
    for (std::size_t i = 0; i < idx.size(); ++i) gx.row(idx[i]) += g.row(static_cast<Index>(i));
  });
}

}  // namespace zsrec

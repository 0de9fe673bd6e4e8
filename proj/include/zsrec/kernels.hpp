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

// Plain numeric kernels on Eigen expressions, shared by the autodiff ops and
// by evaluation code.
#pragma once

#include <Eigen/Core>

namespace zsrec {

// K(i, j) = exp(-|x_i - y_j|^2 / (2 sigma^2)) for the rows of x and y.
template <typename DerivedX, typename DerivedY>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
gaussian_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
                typename DerivedX::Scalar sigma) {
  using Scalar = typename DerivedX::Scalar;
  using Result = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto xn = x.rowwise().squaredNorm();
  const auto yn = y.rowwise().squaredNorm();
  Result d2 = -2 * (x * y.transpose());
  d2.colwise() += xn;
  d2.rowwise() += yn.transpose();
  d2 = d2.cwiseMax(Scalar(0));
  return (d2.array() * (Scalar(-0.5) / (sigma * sigma))).exp().matrix();
}

// Biased squared maximum mean discrepancy between the row sets x and y.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar mmd_biased(const Eigen::MatrixBase<DerivedX>& x,
                                     const Eigen::MatrixBase<DerivedY>& y,
                                     typename DerivedX::Scalar sigma) {
  using Scalar = typename DerivedX::Scalar;
  const Scalar n = static_cast<Scalar>(x.rows());
  const Scalar m = static_cast<Scalar>(y.rows());
  return gaussian_kernel(x, x, sigma).sum() / (n * n) +
         gaussian_kernel(y, y, sigma).sum() / (m * m) -
         2 * gaussian_kernel(x, y, sigma).sum() / (n * m);
}

}  // namespace zsrec

// Copyright 2026 The dp-rezone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dprezone/ols.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "dprezone/error.hpp"

namespace dprezone {

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double student_t_quantile(double prob, double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(dist, prob);
}

std::vector<int> independent_columns(const Eigen::MatrixXd& X,
                                     double tolerance) {
  std::vector<int> kept;
  Eigen::MatrixXd basis(X.rows(), 0);
  for (int j = 0; j < X.cols(); ++j) {
    const Eigen::VectorXd col = X.col(j);
    const double norm = col.norm();
    if (norm == 0.0) continue;
    Eigen::VectorXd residual = col;
    if (basis.cols() > 0) {
      // Orthonormal basis: subtract the projection twice for stability.
      for (int pass = 0; pass < 2; ++pass) {
        residual -= basis * (basis.transpose() * residual);
      }
    }
    const double rnorm = residual.norm();
    if (rnorm <= tolerance * norm) continue;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = residual / rnorm;
    kept.push_back(j);
  }
  return kept;
}

RegressionResult ols_regress(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (static_cast<std::size_t>(y.size()) != n) {
    throw ValidationError("design and response have different lengths");
  }
  if (names.size() != p) {
    throw ValidationError("need one name per design column");
  }
  if (n <= p) {
    throw ValidationError("OLS needs more observations (" + std::to_string(n) +
                          ") than parameters (" + std::to_string(p) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < p) {
    throw ValidationError("design matrix is rank deficient (rank " +
                          std::to_string(qr.rank()) + " < " +
                          std::to_string(p) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double ssr = resid.squaredNorm();
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();

  RegressionResult r;
  r.n = n;
  r.df = n - p;
  r.sigma2 = ssr / static_cast<double>(r.df);
  if (sst > 0.0) {
    r.r_squared = 1.0 - ssr / sst;
  } else {
    r.r_squared = ssr == 0.0 ? 1.0 : 0.0;
  }
  r.adj_r_squared = 1.0 - (1.0 - r.r_squared) * static_cast<double>(n - 1) /
                              static_cast<double>(r.df);

  // (X'X)^-1 = P R^-1 R^-T P^T.
  const Eigen::MatrixXd R =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd perm = qr.colsPermutation();
  const Eigen::MatrixXd cov_unscaled =
      perm * (r_inv * r_inv.transpose()) * perm.transpose();

  const double tcrit = student_t_quantile(0.975, static_cast<double>(r.df));
  for (std::size_t j = 0; j < p; ++j) {
    RegressionTerm t;
    t.name = names[j];
    t.coefficient = beta(j);
    t.std_error = std::sqrt(std::max(0.0, r.sigma2 * cov_unscaled(j, j)));
    if (t.std_error > 0.0) {
      t.t = t.coefficient / t.std_error;
      t.p = student_t_two_sided_p(t.t, static_cast<double>(r.df));
    } else if (t.coefficient == 0.0) {
      t.t = 0.0;
      t.p = 1.0;
    } else {
      t.t = std::copysign(std::numeric_limits<double>::infinity(), t.coefficient);
      t.p = 0.0;
    }
    t.ci_lo = t.coefficient - tcrit * t.std_error;
    t.ci_hi = t.coefficient + tcrit * t.std_error;
    r.terms.push_back(t);
  }
  return r;
}

}  // namespace dprezone

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

#ifndef DPREZONE_OLS_HPP_
#define DPREZONE_OLS_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dprezone {

struct RegressionTerm {
  std::string name;
  double coefficient = 0.0;
  double std_error = 0.0;
  double t = 0.0;
  double p = 1.0;
  double ci_lo = 0.0;  // 95%
  double ci_hi = 0.0;
};

struct RegressionResult {
  std::vector<RegressionTerm> terms;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double sigma2 = 0.0;  // residual variance estimate
  std::size_t n = 0;
  std::size_t df = 0;  // n - p
  std::vector<std::string> dropped;  // columns removed by rank repair
  std::vector<std::string> warnings;
};

// Ordinary least squares via column-pivoted Householder QR. `X` must carry
// its own intercept column. SE = sqrt(diag(sigma2 (X'X)^-1)), two-sided
// p-values and 95% intervals from Student t with n - p degrees of freedom.
// Throws ValidationError when n <= p or X is rank deficient.
//
// When a coefficient and its SE are both zero (exact fit), t = 0 and p = 1.
// R^2 uses the centered total sum of squares; a constant y fitted exactly
// reports R^2 = 1.
RegressionResult ols_regress(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names);

// Indices of columns kept by greedy left-to-right rank repair: a column is
// dropped when its residual after projection onto the kept columns is
// negligible relative to its norm.
std::vector<int> independent_columns(const Eigen::MatrixXd& X,
                                     double tolerance = 1e-10);

// Two-sided Student-t helpers (Boost.Math).
double student_t_two_sided_p(double t, double df);
double student_t_quantile(double prob, double df);

}  // namespace dprezone

#endif  // DPREZONE_OLS_HPP_

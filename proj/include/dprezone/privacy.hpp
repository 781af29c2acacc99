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

#ifndef DPREZONE_PRIVACY_HPP_
#define DPREZONE_PRIVACY_HPP_

#include <cstdint>

#include "dprezone/district.hpp"
#include "dprezone/rng.hpp"

namespace dprezone {

struct PrivacyParams {
  double epsilon = 1.0;
  // One student changes one group entry and the block total.
  int sensitivity = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

// alpha = exp(epsilon / sensitivity); always > 1 for valid params.
double geometric_alpha(const PrivacyParams& params);

// Laplace(0, scale) by inverse CDF: x = -scale * sgn(u - 1/2) * ln(1 - 2|u - 1/2|)
// with u ~ U[0, 1). Not used by the privatization pipeline.
double laplace_inverse_cdf(double u, double scale);
double sample_laplace(double scale, Rng& rng);

// Two-sided geometric law: P(k) = ((alpha-1)/(alpha+1)) * alpha^-|k|.
// Draws zero with exactly that mass, otherwise a uniform sign and a
// geometric magnitude >= 1 with ratio 1/alpha.
class TwoSidedGeometric {
 public:
  explicit TwoSidedGeometric(double alpha);

  std::int64_t operator()(Rng& rng) const;

  double alpha() const { return alpha_; }
  double pmf(std::int64_t k) const;

 private:
  double alpha_;
  double zero_mass_;
  double log_inv_alpha_;
};

std::int64_t sample_two_sided_geometric(double alpha, Rng& rng);

// Closed-form variance 2*alpha / (alpha-1)^2.
double variance_two_sided_geometric(double alpha);

// Adds i.i.d. two-sided geometric noise to every group entry and every
// total, then clamps each entry at zero. The result is flagged privatized;
// it need not satisfy total >= sum of groups.
CountsMatrix privatize_counts(const CountsMatrix& counts,
                              const PrivacyParams& params, Rng& rng);

// Clamped addition used by privatize_counts, exposed for testing.
std::int64_t clamp_noisy(std::int64_t value, std::int64_t noise);

}  // namespace dprezone

#endif  // DPREZONE_PRIVACY_HPP_

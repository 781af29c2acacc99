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

#include "dprezone/privacy.hpp"

#include <cmath>
#include <limits>

#include "dprezone/error.hpp"

namespace dprezone {

void PrivacyParams::validate() const {
  if (!(epsilon > 0.0) || std::isnan(epsilon)) {
    throw ValidationError("epsilon must be positive");
  }
  if (sensitivity < 1) throw ValidationError("sensitivity must be at least 1");
}

double geometric_alpha(const PrivacyParams& params) {
  params.validate();
  return std::exp(params.epsilon / params.sensitivity);
}

double laplace_inverse_cdf(double u, double scale) {
  const double d = u - 0.5;
  if (d == 0.0) return 0.0;
  const double sign = d > 0 ? 1.0 : -1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(d));
}

double sample_laplace(double scale, Rng& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("Laplace scale must be finite and positive");
  }
  double u;
  do {
    u = rng.uniform();
  } while (u == 0.0);  // keeps 1 - 2|u - 1/2| > 0
  return laplace_inverse_cdf(u, scale);
}

TwoSidedGeometric::TwoSidedGeometric(double alpha) : alpha_(alpha) {
  if (!(alpha > 1.0)) {
    throw ValidationError("two-sided geometric requires alpha > 1");
  }
  if (std::isinf(alpha)) {
    zero_mass_ = 1.0;
    log_inv_alpha_ = -std::numeric_limits<double>::infinity();
  } else {
    zero_mass_ = (alpha - 1.0) / (alpha + 1.0);
    log_inv_alpha_ = -std::log(alpha);
  }
}

double TwoSidedGeometric::pmf(std::int64_t k) const {
  if (std::isinf(alpha_)) return k == 0 ? 1.0 : 0.0;
  return zero_mass_ * std::exp(log_inv_alpha_ * std::abs(static_cast<double>(k)));
}

std::int64_t TwoSidedGeometric::operator()(Rng& rng) const {
  if (rng.uniform() < zero_mass_) return 0;
  // Magnitude m >= 1 with P(m) = (1 - 1/alpha) alpha^-(m-1): inverse CDF of
  // the failure count of a geometric law with success probability 1 - 1/alpha.
  const double u = rng.uniform_open_closed();
  const double failures = std::floor(std::log(u) / log_inv_alpha_);
  constexpr double kCap = 1e15;
  const auto magnitude =
      1 + static_cast<std::int64_t>(std::min(failures, kCap));
  return (rng.next_u64() & 1) ? magnitude : -magnitude;
}

std::int64_t sample_two_sided_geometric(double alpha, Rng& rng) {
  return TwoSidedGeometric(alpha)(rng);
}

double variance_two_sided_geometric(double alpha) {
  if (!(alpha > 1.0)) {
    throw ValidationError("two-sided geometric requires alpha > 1");
  }
  if (std::isinf(alpha)) return 0.0;
  const double d = alpha - 1.0;
  return 2.0 * alpha / (d * d);
}

std::int64_t clamp_noisy(std::int64_t value, std::int64_t noise) {
  const std::int64_t v = value + noise;
  return v < 0 ? 0 : v;
}

CountsMatrix privatize_counts(const CountsMatrix& counts,
                              const PrivacyParams& params, Rng& rng) {
  const TwoSidedGeometric noise(geometric_alpha(params));
  CountsMatrix out = counts;
  // Group-major row order, then the totals row.
  for (std::size_t g = 0; g < counts.groups().size(); ++g) {
    for (std::size_t b = 0; b < counts.blocks(); ++b) {
      out.at(g, b) = clamp_noisy(counts.at(g, b), noise(rng));
    }
  }
  for (std::size_t b = 0; b < counts.blocks(); ++b) {
    out.total(b) = clamp_noisy(counts.total(b), noise(rng));
  }
  out.set_privatized(true);
  return out;
}

}  // namespace dprezone

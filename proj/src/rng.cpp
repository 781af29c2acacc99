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

#include "dprezone/rng.hpp"

#include <cmath>

namespace dprezone {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                          std::uint64_t index) {
  return splitmix64(base ^ splitmix64(tag ^ splitmix64(index)));
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire-style rejection to avoid modulo bias.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::int64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  // exp(-mean) underflows for large means; a sum of Poissons is Poisson.
  if (mean > 400.0) {
    const int pieces = static_cast<int>(std::ceil(mean / 400.0));
    std::int64_t sum = 0;
    for (int i = 0; i < pieces; ++i) sum += poisson(mean / pieces);
    return sum;
  }
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::int64_t k = 0;
  while (u > cdf && k < 100000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && cdf < u) break;
  }
  return k;
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
  std::int64_t k = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (uniform() < p) ++k;
  }
  return k;
}

}  // namespace dprezone

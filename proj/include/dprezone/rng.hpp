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

#ifndef DPREZONE_RNG_HPP_
#define DPREZONE_RNG_HPP_

#include <cstdint>
#include <random>

namespace dprezone {

// SplitMix64 finalizer (Steele, Lea & Flood). Used for every seed
// derivation so streams are reproducible across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for a (stream tag, index) pair under a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                          std::uint64_t index);

// Seedable 64-bit stream. Only the raw mt19937_64 output is used; all
// variate conversions are done here so results do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)), seed_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1].
  double uniform_open_closed() { return 1.0 - uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Poisson variate by sequential inversion (split into pieces for large means).
  std::int64_t poisson(double mean);

  std::int64_t binomial(std::int64_t n, double p);

  // Independent child stream.
  Rng split(std::uint64_t index) const {
    return Rng(derive_seed(seed_, 0x5eed, index));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace dprezone

#endif  // DPREZONE_RNG_HPP_

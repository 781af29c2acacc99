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

#ifndef DPREZONE_METRICS_HPP_
#define DPREZONE_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dprezone/district.hpp"
#include "dprezone/rng.hpp"

namespace dprezone {

// The two sides of the dissimilarity objective. An empty `complement`
// means "block total minus focal", clamped at zero.
struct GroupPair {
  std::vector<Group> focal;
  std::optional<std::vector<Group>> complement;

  static GroupPair white_nonwhite() { return {{Group::kWhite}, std::nullopt}; }
  static GroupPair low_high_ses() {
    return {{Group::kLowSes}, std::vector<Group>{Group::kHighSes}};
  }

  void validate() const;
  std::string describe() const;
};

// Per-block counts of each side of a pair.
struct PairCounts {
  std::vector<std::int64_t> focal;
  std::vector<std::int64_t> complement;
  std::int64_t focal_total = 0;
  std::int64_t complement_total = 0;
};

// Throws ValidationError if a pair group is missing from `counts`.
PairCounts pair_counts(const CountsMatrix& counts, const GroupPair& pair);

// Exact form of the index: value = numerator / (2 * F * C) with
// numerator = sum_s |F_s * C - C_s * F|, all integers. Comparing numerators
// at fixed (F, C) compares dissimilarities exactly.
struct DissimilarityValue {
  std::int64_t numerator = 0;
  std::int64_t focal_denominator = 1;
  std::int64_t complement_denominator = 1;

  double value() const {
    return static_cast<double>(numerator) /
           (2.0 * static_cast<double>(focal_denominator) *
            static_cast<double>(complement_denominator));
  }
};

// District-wide denominators. A zero side total on ground-truth counts
// throws DegenerateDistrictError; on privatized counts it becomes 1.
std::pair<std::int64_t, std::int64_t> dissimilarity_denominators(
    const PairCounts& pc, bool privatized, const GroupPair& pair);

DissimilarityValue dissimilarity_exact(const Assignment& assignment,
                                       const PairCounts& pc,
                                       std::size_t n_schools, bool privatized,
                                       const GroupPair& pair);

double dissimilarity(const Assignment& assignment, const CountsMatrix& counts,
                     const GroupPair& pair);

// A metric that may have been defined by convention (empty weights).
struct MetricValue {
  double value = 0.0;
  bool warning = false;
};

// Student-weighted mean travel time of `group` to the assigned school.
MetricValue avg_travel_time(const Assignment& assignment,
                            const TravelTimeMatrix& travel,
                            const CountsMatrix& counts, Group group);

MetricValue pct_rezoned(const Assignment& assignment, const Assignment& current,
                        const CountsMatrix& counts, Group group);

std::size_t blocks_rezoned(const Assignment& assignment,
                           const Assignment& current);

struct RezoneOverlap {
  std::size_t private_rezoned = 0;
  std::size_t nonprivate_rezoned = 0;
  std::size_t coincide = 0;         // private destination == non-private one
  std::size_t private_only = 0;     // private rezone, different outcome
  std::size_t nonprivate_only = 0;  // non-private rezone the private one kept
  // Fractions of the private rezones; empty when nothing was rezoned.
  std::optional<double> coincide_fraction;
  std::optional<double> private_only_fraction;
  // Fraction of the non-private rezones left untouched by the private plan.
  std::optional<double> nonprivate_only_fraction;
};

RezoneOverlap rezone_overlap(const Assignment& private_assignment,
                             const Assignment& nonprivate_assignment,
                             const Assignment& current);

// Per-block fraction of assignments that differ from `current`.
std::vector<double> rezone_frequency(std::span<const Assignment> assignments,
                                     const Assignment& current);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

double mean(std::span<const double> xs);
double median(std::vector<double> xs);

// Percentile bootstrap of the mean.
Interval bootstrap_ci(std::span<const double> samples, double level,
                      int resamples, Rng& rng);
Interval bootstrap_ci(std::span<const double> samples, Rng& rng);

// Percentile bootstrap of mean(a) - mean(b), resampling each independently.
Interval bootstrap_diff_ci(std::span<const double> a, std::span<const double> b,
                           double level, int resamples, Rng& rng);

struct GroupMetric {
  Group group;
  MetricValue metric;
};

struct OutcomeReport {
  double dissimilarity = 0.0;
  std::vector<GroupMetric> travel_by_group;
  std::vector<GroupMetric> pct_rezoned_by_group;
  std::size_t blocks_rezoned = 0;
  std::optional<RezoneOverlap> overlap;  // private scenarios only
};

// All measures on the district's own (ground-truth) counts. `nonprivate`
// is supplied for private scenarios to fill in the overlap.
OutcomeReport evaluate_outcome(const District& district,
                               const Assignment& assignment,
                               const GroupPair& pair,
                               const Assignment* nonprivate = nullptr);

}  // namespace dprezone

#endif  // DPREZONE_METRICS_HPP_

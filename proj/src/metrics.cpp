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

#include "dprezone/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dprezone/error.hpp"

namespace dprezone {

void GroupPair::validate() const {
  if (focal.empty()) throw ValidationError("group pair needs a focal group");
  if (complement) {
    if (complement->empty()) {
      throw ValidationError("explicit complement must not be empty");
    }
    std::set<Group> f(focal.begin(), focal.end());
    for (Group g : *complement) {
      if (f.count(g)) {
        throw ValidationError("focal and complement groups must be disjoint");
      }
    }
  }
}

std::string GroupPair::describe() const {
  std::string out;
  for (Group g : focal) {
    if (!out.empty()) out += "+";
    out += group_label(g);
  }
  out += " vs ";
  if (!complement) return out + "rest";
  std::string rest;
  for (Group g : *complement) {
    if (!rest.empty()) rest += "+";
    rest += group_label(g);
  }
  return out + rest;
}

PairCounts pair_counts(const CountsMatrix& counts, const GroupPair& pair) {
  pair.validate();
  auto indices = [&](const std::vector<Group>& groups) {
    std::vector<std::size_t> idx;
    for (Group g : groups) {
      auto i = counts.group_index(g);
      if (!i) {
        throw ValidationError("group " + std::string(group_label(g)) +
                              " is not present in the counts");
      }
      idx.push_back(*i);
    }
    return idx;
  };
  const auto focal_idx = indices(pair.focal);
  const auto comp_idx =
      pair.complement ? indices(*pair.complement) : std::vector<std::size_t>{};

  PairCounts pc;
  const std::size_t nb = counts.blocks();
  pc.focal.resize(nb);
  pc.complement.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    std::int64_t f = 0;
    for (auto i : focal_idx) f += counts.at(i, b);
    std::int64_t c = 0;
    if (pair.complement) {
      for (auto i : comp_idx) c += counts.at(i, b);
    } else {
      c = std::max<std::int64_t>(counts.total(b) - f, 0);
    }
    pc.focal[b] = f;
    pc.complement[b] = c;
    pc.focal_total += f;
    pc.complement_total += c;
  }
  return pc;
}

std::pair<std::int64_t, std::int64_t> dissimilarity_denominators(
    const PairCounts& pc, bool privatized, const GroupPair& pair) {
  std::int64_t f = pc.focal_total;
  std::int64_t c = pc.complement_total;
  if (f == 0 || c == 0) {
    if (!privatized) {
      throw DegenerateDistrictError(
          "degenerate district: a side of " + pair.describe() +
          " has no students, dissimilarity is undefined");
    }
    if (f == 0) f = 1;
    if (c == 0) c = 1;
  }
  return {f, c};
}

DissimilarityValue dissimilarity_exact(const Assignment& assignment,
                                       const PairCounts& pc,
                                       std::size_t n_schools, bool privatized,
                                       const GroupPair& pair) {
  const auto [f_total, c_total] =
      dissimilarity_denominators(pc, privatized, pair);
  std::vector<std::int64_t> f(n_schools, 0), c(n_schools, 0);
  for (std::size_t b = 0; b < assignment.size(); ++b) {
    const auto s = static_cast<std::size_t>(assignment.school_of[b]);
    if (s >= n_schools) throw InternalError("assignment school out of range");
    f[s] += pc.focal[b];
    c[s] += pc.complement[b];
  }
  DissimilarityValue v;
  v.focal_denominator = f_total;
  v.complement_denominator = c_total;
  for (std::size_t s = 0; s < n_schools; ++s) {
    v.numerator += std::abs(f[s] * c_total - c[s] * f_total);
  }
  return v;
}

double dissimilarity(const Assignment& assignment, const CountsMatrix& counts,
                     const GroupPair& pair) {
  if (assignment.size() != counts.blocks()) {
    throw ValidationError("assignment and counts cover different blocks");
  }
  SchoolIndex max_school = -1;
  for (auto s : assignment.school_of) max_school = std::max(max_school, s);
  const PairCounts pc = pair_counts(counts, pair);
  return dissimilarity_exact(assignment, pc,
                             static_cast<std::size_t>(max_school + 1),
                             counts.privatized(), pair)
      .value();
}

namespace {

std::size_t require_group(const CountsMatrix& counts, Group group) {
  auto g = counts.group_index(group);
  if (!g) {
    throw ValidationError("group " + std::string(group_label(group)) +
                          " is not present in the counts");
  }
  return *g;
}

}  // namespace

MetricValue avg_travel_time(const Assignment& assignment,
                            const TravelTimeMatrix& travel,
                            const CountsMatrix& counts, Group group) {
  const std::size_t g = require_group(counts, group);
  double weighted = 0.0;
  std::int64_t weight = 0;
  for (std::size_t b = 0; b < assignment.size(); ++b) {
    const auto n = counts.at(g, b);
    weighted += static_cast<double>(n) *
                travel.at(static_cast<BlockIndex>(b), assignment.school_of[b]);
    weight += n;
  }
  if (weight == 0) return {0.0, true};
  return {weighted / static_cast<double>(weight), false};
}

MetricValue pct_rezoned(const Assignment& assignment, const Assignment& current,
                        const CountsMatrix& counts, Group group) {
  const std::size_t g = require_group(counts, group);
  std::int64_t moved = 0;
  std::int64_t total = 0;
  for (std::size_t b = 0; b < assignment.size(); ++b) {
    const auto n = counts.at(g, b);
    total += n;
    if (assignment.school_of[b] != current.school_of[b]) moved += n;
  }
  if (total == 0) return {0.0, true};
  return {static_cast<double>(moved) / static_cast<double>(total), false};
}

std::size_t blocks_rezoned(const Assignment& assignment,
                           const Assignment& current) {
  std::size_t n = 0;
  for (std::size_t b = 0; b < assignment.size(); ++b) {
    if (assignment.school_of[b] != current.school_of[b]) ++n;
  }
  return n;
}

RezoneOverlap rezone_overlap(const Assignment& priv, const Assignment& nonpriv,
                             const Assignment& current) {
  if (priv.size() != current.size() || nonpriv.size() != current.size()) {
    throw ValidationError("assignments cover different block sets");
  }
  RezoneOverlap o;
  for (std::size_t b = 0; b < current.size(); ++b) {
    const bool p = priv.school_of[b] != current.school_of[b];
    const bool n = nonpriv.school_of[b] != current.school_of[b];
    if (p) ++o.private_rezoned;
    if (n) ++o.nonprivate_rezoned;
    if (p && priv.school_of[b] == nonpriv.school_of[b]) ++o.coincide;
    if (n && !p) ++o.nonprivate_only;
  }
  o.private_only = o.private_rezoned - o.coincide;
  if (o.private_rezoned > 0) {
    const double d = static_cast<double>(o.private_rezoned);
    o.coincide_fraction = o.coincide / d;
    o.private_only_fraction = o.private_only / d;
  }
  if (o.nonprivate_rezoned > 0) {
    o.nonprivate_only_fraction =
        o.nonprivate_only / static_cast<double>(o.nonprivate_rezoned);
  }
  return o;
}

std::vector<double> rezone_frequency(std::span<const Assignment> assignments,
                                     const Assignment& current) {
  if (assignments.empty()) {
    throw ValidationError("rezone_frequency needs at least one assignment");
  }
  std::vector<std::size_t> hits(current.size(), 0);
  for (const auto& a : assignments) {
    if (a.size() != current.size()) {
      throw ValidationError("assignments cover different block sets");
    }
    for (std::size_t b = 0; b < current.size(); ++b) {
      if (a.school_of[b] != current.school_of[b]) ++hits[b];
    }
  }
  std::vector<double> freq(current.size());
  for (std::size_t b = 0; b < current.size(); ++b) {
    freq[b] = static_cast<double>(hits[b]) /
              static_cast<double>(assignments.size());
  }
  return freq;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  // Fixed-order summation so results do not depend on scheduling.
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

namespace {

// Linear-interpolated empirical quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double resample_mean(std::span<const double> xs, Rng& rng) {
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sum += xs[rng.below(xs.size())];
  return sum / static_cast<double>(xs.size());
}

void check_bootstrap_args(double level, int resamples) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("confidence level must lie in (0, 1)");
  }
  if (resamples < 1) throw ValidationError("need at least one resample");
}

}  // namespace

Interval bootstrap_ci(std::span<const double> samples, double level,
                      int resamples, Rng& rng) {
  if (samples.empty()) throw ValidationError("bootstrap needs samples");
  check_bootstrap_args(level, resamples);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) m = resample_mean(samples, rng);
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

Interval bootstrap_ci(std::span<const double> samples, Rng& rng) {
  return bootstrap_ci(samples, 0.95, 1000, rng);
}

Interval bootstrap_diff_ci(std::span<const double> a, std::span<const double> b,
                           double level, int resamples, Rng& rng) {
  if (a.empty() || b.empty()) throw ValidationError("bootstrap needs samples");
  check_bootstrap_args(level, resamples);
  std::vector<double> diffs(static_cast<std::size_t>(resamples));
  for (auto& d : diffs) {
    const double ma = resample_mean(a, rng);
    d = ma - resample_mean(b, rng);
  }
  std::sort(diffs.begin(), diffs.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(diffs, tail), quantile_sorted(diffs, 1.0 - tail)};
}

OutcomeReport evaluate_outcome(const District& district,
                               const Assignment& assignment,
                               const GroupPair& pair,
                               const Assignment* nonprivate) {
  const CountsMatrix& counts = district.counts();
  if (counts.privatized()) {
    throw InternalError("outcome measures must use ground-truth counts");
  }
  OutcomeReport r;
  r.dissimilarity = dissimilarity_exact(assignment, pair_counts(counts, pair),
                                        district.num_schools(), false, pair)
                        .value();
  for (Group g : counts.groups()) {
    r.travel_by_group.push_back(
        {g, avg_travel_time(assignment, district.travel(), counts, g)});
    r.pct_rezoned_by_group.push_back(
        {g, pct_rezoned(assignment, district.current(), counts, g)});
  }
  r.blocks_rezoned = blocks_rezoned(assignment, district.current());
  if (nonprivate) {
    r.overlap = rezone_overlap(assignment, *nonprivate, district.current());
  }
  return r;
}

}  // namespace dprezone

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

#include "dprezone/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dprezone/error.hpp"
#include "dprezone/rng.hpp"

namespace dprezone {

std::string_view solver_mode_name(SolverMode mode) {
  return mode == SolverMode::kExact ? "exact" : "heuristic";
}

SolverMode parse_solver_mode(std::string_view name) {
  if (name == "exact") return SolverMode::kExact;
  if (name == "heuristic") return SolverMode::kHeuristic;
  throw ValidationError("unknown solver mode '" + std::string(name) + "'");
}

void SolveParams::validate() const {
  if (!(alpha_t >= 0.0) || !std::isfinite(alpha_t)) {
    throw ValidationError("alpha_t must be a non-negative number");
  }
  if (!(alpha_p >= 0.0) || !std::isfinite(alpha_p)) {
    throw ValidationError("alpha_p must be a non-negative number");
  }
  if (heuristic.restarts < 1) throw ValidationError("restarts must be >= 1");
  if (!(heuristic.initial_temperature >= 0.0)) {
    throw ValidationError("initial temperature must be non-negative");
  }
  if (!(heuristic.cooling > 0.0 && heuristic.cooling <= 1.0)) {
    throw ValidationError("cooling must lie in (0, 1]");
  }
  pair.validate();
}

std::string FeasibilityReport::summary() const {
  if (ok()) return "feasible";
  return "violations: totality=" + std::to_string(totality.size()) +
         " travel=" + std::to_string(travel.size()) +
         " school_size=" + std::to_string(school_size.size()) +
         " contiguity=" + std::to_string(contiguity.size());
}

std::vector<SchoolIndex> candidate_schools(const District& district,
                                           BlockIndex block,
                                           const SolveParams& params) {
  const SchoolIndex cur = district.current()[block];
  const double limit = (1.0 + params.alpha_t) * district.travel().at(block, cur);
  std::vector<SchoolIndex> out;
  for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(district.num_schools());
       ++s) {
    if (s == cur || district.travel().at(block, s) <= limit) out.push_back(s);
  }
  return out;
}

FeasibilityReport check_feasible(const District& district,
                                 const CountsMatrix& counts,
                                 const Assignment& x,
                                 const SolveParams& params) {
  FeasibilityReport report;
  const std::size_t nb = district.num_blocks();
  const std::size_t ns = district.num_schools();
  const Assignment& cur = district.current();

  if (x.size() != nb) {
    report.totality.push_back({-1, -1, "assignment covers " +
                                           std::to_string(x.size()) + " of " +
                                           std::to_string(nb) + " blocks"});
    return report;
  }
  for (std::size_t b = 0; b < nb; ++b) {
    if (x.school_of[b] < 0 || x.school_of[b] >= static_cast<SchoolIndex>(ns)) {
      report.totality.push_back(
          {static_cast<BlockIndex>(b), x.school_of[b], "no valid school"});
    }
  }
  if (!report.totality.empty()) return report;
  if (counts.blocks() != nb) {
    report.totality.push_back({-1, -1, "counts cover a different block set"});
    return report;
  }

  // Travel-time increase.
  for (std::size_t b = 0; b < nb; ++b) {
    const auto bi = static_cast<BlockIndex>(b);
    const double t_new = district.travel().at(bi, x.school_of[b]);
    const double t_cur = district.travel().at(bi, cur.school_of[b]);
    if (!(t_new <= (1.0 + params.alpha_t) * t_cur)) {
      report.travel.push_back(
          {bi, x.school_of[b],
           "travel " + std::to_string(t_new) + " min exceeds " +
               std::to_string((1.0 + params.alpha_t) * t_cur)});
    }
  }

  // School-size increase, on the solver's totals.
  std::vector<std::int64_t> size_new(ns, 0), size_cur(ns, 0);
  for (std::size_t b = 0; b < nb; ++b) {
    size_new[x.school_of[b]] += counts.total(b);
    size_cur[cur.school_of[b]] += counts.total(b);
  }
  for (std::size_t s = 0; s < ns; ++s) {
    const double cap = (1.0 + params.alpha_p) * static_cast<double>(size_cur[s]);
    if (!(static_cast<double>(size_new[s]) <= cap)) {
      report.school_size.push_back(
          {-1, static_cast<SchoolIndex>(s),
           "size " + std::to_string(size_new[s]) + " exceeds cap " +
               std::to_string(cap)});
    }
  }

  // Contiguity: root, pinned, or some strictly closer neighbor on s.
  const auto& closer = district.closer();
  for (std::size_t b = 0; b < nb; ++b) {
    const auto bi = static_cast<BlockIndex>(b);
    const SchoolIndex s = x.school_of[b];
    if (district.is_root_of(bi, s)) continue;
    if (district.pinned(bi) && s == cur.school_of[b]) continue;
    bool supported = false;
    for (BlockIndex n : district.blocks()[b].neighbors) {
      if (x.school_of[n] == s && closer.is_closer(n, bi, s)) {
        supported = true;
        break;
      }
    }
    if (!supported) {
      report.contiguity.push_back(
          {bi, s, "no strictly closer neighbor assigned to the same school"});
    }
  }
  return report;
}

FeasibilityReport check_feasible(const District& district,
                                 const Assignment& assignment,
                                 const SolveParams& params) {
  return check_feasible(district, district.counts(), assignment, params);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> size_caps(const District& district,
                              const CountsMatrix& counts, double alpha_p) {
  std::vector<double> caps(district.num_schools(), 0.0);
  std::vector<std::int64_t> cur(district.num_schools(), 0);
  for (std::size_t b = 0; b < district.num_blocks(); ++b) {
    cur[district.current().school_of[b]] += counts.total(b);
  }
  for (std::size_t s = 0; s < caps.size(); ++s) {
    caps[s] = (1.0 + alpha_p) * static_cast<double>(cur[s]);
  }
  return caps;
}

// Per-block school options after static filtering: travel, pinning and
// schools that could never support the block.
std::vector<std::vector<SchoolIndex>> static_options(const District& district,
                                                     const SolveParams& params) {
  std::vector<std::vector<SchoolIndex>> options(district.num_blocks());
  for (BlockIndex b = 0; b < static_cast<BlockIndex>(district.num_blocks());
       ++b) {
    const SchoolIndex cur = district.current()[b];
    if (district.pinned(b)) {
      options[b] = {cur};
      continue;
    }
    for (SchoolIndex s : candidate_schools(district, b, params)) {
      if (district.is_root_of(b, s) || !district.closer().closer(b, s).empty()) {
        options[b].push_back(s);
      }
    }
  }
  return options;
}

bool exempt(const District& d, BlockIndex b, SchoolIndex s) {
  return d.is_root_of(b, s) || (d.pinned(b) && d.current()[b] == s);
}

class ExactSearch {
 public:
  ExactSearch(const District& district, const CountsMatrix& counts,
              const SolveParams& params)
      : d_(district),
        nb_(static_cast<int>(district.num_blocks())),
        ns_(static_cast<int>(district.num_schools())),
        pc_(pair_counts(counts, params.pair)),
        caps_(size_caps(district, counts, params.alpha_p)),
        options_(static_options(district, params)),
        ready_at_(district.num_blocks()),
        x_(district.num_blocks(), -1),
        size_(district.num_schools(), 0),
        f_(district.num_schools(), 0),
        c_(district.num_schools(), 0) {
    const auto [ft, ct] =
        dissimilarity_denominators(pc_, counts.privatized(), params.pair);
    f_total_ = ft;
    c_total_ = ct;
    for (int b = 0; b < nb_; ++b) totals_.push_back(counts.total(b));
    // A (block, school) choice can be verified once every closer neighbor
    // has been decided; blocks are decided in index order.
    for (BlockIndex b = 0; b < nb_; ++b) {
      for (SchoolIndex s : options_[b]) {
        if (exempt(d_, b, s)) continue;
        int ready = b;
        for (BlockIndex n : d_.closer().closer(b, s)) ready = std::max(ready, n);
        ready_at_[ready].push_back({b, s});
      }
    }
  }

  bool run() {
    descend(0);
    return found_;
  }

  const Assignment& best() const { return best_; }
  DissimilarityValue best_value() const {
    return {best_numerator_, f_total_, c_total_};
  }
  std::uint64_t nodes() const { return nodes_; }

 private:
  struct Pending {
    BlockIndex block;
    SchoolIndex school;
  };

  bool supported(BlockIndex b, SchoolIndex s) const {
    for (BlockIndex n : d_.closer().closer(b, s)) {
      if (x_[n] == s) return true;
    }
    return false;
  }

  void descend(int depth) {
    ++nodes_;
    if (depth == nb_) {
      std::int64_t numerator = 0;
      for (int s = 0; s < ns_; ++s) {
        numerator += std::abs(f_[s] * c_total_ - c_[s] * f_total_);
      }
      // Strict improvement only: enumeration order is lexicographic.
      if (!found_ || numerator < best_numerator_) {
        found_ = true;
        best_numerator_ = numerator;
        best_.school_of = x_;
      }
      return;
    }
    const BlockIndex b = depth;
    for (SchoolIndex s : options_[b]) {
      if (static_cast<double>(size_[s] + totals_[b]) > caps_[s]) continue;
      x_[b] = s;
      size_[s] += totals_[b];
      f_[s] += pc_.focal[b];
      c_[s] += pc_.complement[b];
      bool ok = true;
      for (const Pending& p : ready_at_[b]) {
        if (x_[p.block] == p.school && !supported(p.block, p.school)) {
          ok = false;
          break;
        }
      }
      if (ok) descend(depth + 1);
      size_[s] -= totals_[b];
      f_[s] -= pc_.focal[b];
      c_[s] -= pc_.complement[b];
      x_[b] = -1;
    }
  }

  const District& d_;
  int nb_;
  int ns_;
  PairCounts pc_;
  std::vector<double> caps_;
  std::vector<std::vector<SchoolIndex>> options_;
  std::vector<std::vector<Pending>> ready_at_;
  std::vector<std::int64_t> totals_;
  std::int64_t f_total_ = 1;
  std::int64_t c_total_ = 1;

  std::vector<SchoolIndex> x_;
  std::vector<std::int64_t> size_, f_, c_;
  bool found_ = false;
  std::int64_t best_numerator_ = 0;
  Assignment best_;
  std::uint64_t nodes_ = 0;
};

// Incrementally maintained feasible state for the local search.
class LocalState {
 public:
  LocalState(const District& district, const PairCounts& pc,
             const std::vector<std::int64_t>& totals,
             const std::vector<double>& caps, std::int64_t f_total,
             std::int64_t c_total)
      : d_(district),
        pc_(pc),
        totals_(totals),
        caps_(caps),
        f_total_(f_total),
        c_total_(c_total) {
    reset();
  }

  void reset() {
    const std::size_t ns = d_.num_schools();
    x_ = d_.current().school_of;
    size_.assign(ns, 0);
    f_.assign(ns, 0);
    c_.assign(ns, 0);
    for (std::size_t b = 0; b < x_.size(); ++b) {
      size_[x_[b]] += totals_[b];
      f_[x_[b]] += pc_.focal[b];
      c_[x_[b]] += pc_.complement[b];
    }
    support_.assign(x_.size(), 0);
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(x_.size()); ++b) {
      support_[b] = count_support(b, x_[b]);
    }
    numerator_ = 0;
    for (std::size_t s = 0; s < ns; ++s) numerator_ += term(s);
  }

  std::int64_t numerator() const { return numerator_; }
  const std::vector<SchoolIndex>& assignment() const { return x_; }
  SchoolIndex school_of(BlockIndex b) const { return x_[b]; }

  // Change in the objective numerator if b moved to s.
  std::int64_t delta(BlockIndex b, SchoolIndex s) const {
    const SchoolIndex from = x_[b];
    const std::int64_t before = term(from) + term(s);
    const std::int64_t after =
        std::abs((f_[from] - pc_.focal[b]) * c_total_ -
                 (c_[from] - pc_.complement[b]) * f_total_) +
        std::abs((f_[s] + pc_.focal[b]) * c_total_ -
                 (c_[s] + pc_.complement[b]) * f_total_);
    return after - before;
  }

  // Whether moving b to s keeps every constraint satisfied. Travel and
  // pinning are handled by the caller's option lists.
  bool legal(BlockIndex b, SchoolIndex s) const {
    const SchoolIndex from = x_[b];
    if (s == from) return false;
    if (static_cast<double>(size_[s] + totals_[b]) > caps_[s]) return false;
    if (!d_.is_root_of(b, s) && count_support(b, s) == 0) return false;
    // Neighbors on `from` that lean on b must keep another support.
    for (BlockIndex n : d_.blocks()[b].neighbors) {
      if (x_[n] != from || exempt(d_, n, from)) continue;
      if (d_.closer().is_closer(b, n, from) && support_[n] < 2) return false;
    }
    return true;
  }

  void apply(BlockIndex b, SchoolIndex s) {
    const SchoolIndex from = x_[b];
    numerator_ -= term(from) + term(s);
    size_[from] -= totals_[b];
    f_[from] -= pc_.focal[b];
    c_[from] -= pc_.complement[b];
    size_[s] += totals_[b];
    f_[s] += pc_.focal[b];
    c_[s] += pc_.complement[b];
    numerator_ += term(from) + term(s);
    for (BlockIndex n : d_.blocks()[b].neighbors) {
      if (x_[n] == from && d_.closer().is_closer(b, n, from)) --support_[n];
      if (x_[n] == s && d_.closer().is_closer(b, n, s)) ++support_[n];
    }
    x_[b] = s;
    support_[b] = count_support(b, s);
  }

 private:
  std::int64_t term(std::size_t s) const {
    return std::abs(f_[s] * c_total_ - c_[s] * f_total_);
  }

  int count_support(BlockIndex b, SchoolIndex s) const {
    int n_support = 0;
    for (BlockIndex n : d_.closer().closer(b, s)) {
      if (x_[n] == s) ++n_support;
    }
    return n_support;
  }

  const District& d_;
  const PairCounts& pc_;
  const std::vector<std::int64_t>& totals_;
  const std::vector<double>& caps_;
  std::int64_t f_total_;
  std::int64_t c_total_;

  std::vector<SchoolIndex> x_;
  std::vector<std::int64_t> size_, f_, c_;
  std::vector<int> support_;
  std::int64_t numerator_ = 0;
};

SolveResult finish(const District& district, const CountsMatrix& counts,
                   const SolveParams& params, SolveResult result) {
  const FeasibilityReport report =
      check_feasible(district, counts, result.assignment, params);
  if (!report.ok()) {
    throw InternalError("solver produced an infeasible assignment (" +
                        report.summary() + ")");
  }
  return result;
}

void check_counts(const District& district, const CountsMatrix& counts) {
  if (counts.blocks() != district.num_blocks()) {
    throw ValidationError("counts matrix does not match the district");
  }
}

}  // namespace

SolveResult solve_exact(const District& district, const CountsMatrix& counts,
                        const SolveParams& params) {
  params.validate();
  check_counts(district, counts);
  if (district.num_blocks() > params.exact_size_cap) {
    throw SizeCapError("exact solver is capped at " +
                       std::to_string(params.exact_size_cap) +
                       " blocks; district has " +
                       std::to_string(district.num_blocks()));
  }
  const auto start = Clock::now();
  ExactSearch search(district, counts, params);
  if (!search.run()) {
    throw InternalError("no feasible assignment found although the status quo "
                        "is feasible");
  }
  SolveResult result;
  result.assignment = search.best();
  result.objective = search.best_value();
  result.iterations = search.nodes();
  result.proven_optimal = true;
  result.mode = SolverMode::kExact;
  result.wall_seconds = seconds_since(start);
  return finish(district, counts, params, std::move(result));
}

SolveResult solve_heuristic(const District& district,
                            const CountsMatrix& counts,
                            const SolveParams& params) {
  params.validate();
  check_counts(district, counts);
  const auto start = Clock::now();
  const std::size_t nb = district.num_blocks();
  const PairCounts pc = pair_counts(counts, params.pair);
  const auto [f_total, c_total] =
      dissimilarity_denominators(pc, counts.privatized(), params.pair);
  std::vector<std::int64_t> totals(nb);
  for (std::size_t b = 0; b < nb; ++b) totals[b] = counts.total(b);
  const std::vector<double> caps = size_caps(district, counts, params.alpha_p);
  const auto options = static_options(district, params);

  std::vector<BlockIndex> movable;
  for (BlockIndex b = 0; b < static_cast<BlockIndex>(nb); ++b) {
    if (options[b].size() > 1) movable.push_back(b);
  }
  // Membership test for the per-block option lists.
  std::vector<std::vector<char>> allowed(nb,
                                         std::vector<char>(district.num_schools()));
  for (std::size_t b = 0; b < nb; ++b) {
    for (SchoolIndex s : options[b]) allowed[b][s] = 1;
  }

  const std::uint64_t iters =
      params.heuristic.max_iters ? params.heuristic.max_iters : 200 * nb;
  const double scale = 2.0 * static_cast<double>(f_total) *
                       static_cast<double>(c_total);

  LocalState state(district, pc, totals, caps, f_total, c_total);
  std::int64_t best_numerator = state.numerator();
  std::vector<SchoolIndex> best = state.assignment();
  std::uint64_t moves = 0;
  std::vector<SchoolIndex> proposals;

  auto consider_incumbent = [&] {
    const std::int64_t n = state.numerator();
    if (n < best_numerator ||
        (n == best_numerator && state.assignment() < best)) {
      best_numerator = n;
      best = state.assignment();
    }
  };

  for (int restart = 0; restart < params.heuristic.restarts && !movable.empty();
       ++restart) {
    Rng rng(derive_seed(params.seed, 0xA55E, static_cast<std::uint64_t>(restart)));
    state.reset();
    double temperature = params.heuristic.initial_temperature;
    for (std::uint64_t it = 0; it < iters; ++it, temperature *= params.heuristic.cooling) {
      const BlockIndex b = movable[rng.below(movable.size())];
      const SchoolIndex from = state.school_of(b);
      // Frontier proposals: schools of neighbors, or the school rooted here.
      proposals.clear();
      for (BlockIndex n : district.blocks()[b].neighbors) {
        const SchoolIndex s = state.school_of(n);
        if (s != from && allowed[b][s] &&
            std::find(proposals.begin(), proposals.end(), s) == proposals.end()) {
          proposals.push_back(s);
        }
      }
      for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(district.num_schools());
           ++s) {
        if (s != from && allowed[b][s] && district.is_root_of(b, s) &&
            std::find(proposals.begin(), proposals.end(), s) == proposals.end()) {
          proposals.push_back(s);
        }
      }
      if (proposals.empty()) continue;
      const SchoolIndex to = proposals[rng.below(proposals.size())];
      if (!state.legal(b, to)) continue;
      const std::int64_t delta = state.delta(b, to);
      bool accept = delta <= 0;
      if (!accept && temperature > 0.0) {
        const double worse = static_cast<double>(delta) / scale;
        accept = rng.uniform() < std::exp(-worse / temperature);
      }
      if (!accept) continue;
      state.apply(b, to);
      ++moves;
      if (delta <= 0) consider_incumbent();
    }
  }

  SolveResult result;
  result.assignment.school_of = std::move(best);
  result.objective = {best_numerator, f_total, c_total};
  result.iterations = moves;
  result.proven_optimal = false;
  result.mode = SolverMode::kHeuristic;
  result.wall_seconds = seconds_since(start);
  return finish(district, counts, params, std::move(result));
}

SolveResult solve(const District& district, const CountsMatrix& counts,
                  const SolveParams& params) {
  return params.mode == SolverMode::kExact
             ? solve_exact(district, counts, params)
             : solve_heuristic(district, counts, params);
}

}  // namespace dprezone

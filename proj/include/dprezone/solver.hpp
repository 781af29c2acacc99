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

#ifndef DPREZONE_SOLVER_HPP_
#define DPREZONE_SOLVER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dprezone/district.hpp"
#include "dprezone/metrics.hpp"

namespace dprezone {

enum class SolverMode { kExact, kHeuristic };

std::string_view solver_mode_name(SolverMode mode);
SolverMode parse_solver_mode(std::string_view name);

struct HeuristicKnobs {
  // Iterations per restart; 0 means 200 * |B|.
  std::uint64_t max_iters = 0;
  int restarts = 8;
  double initial_temperature = 0.05;  // objective (dissimilarity) units
  double cooling = 0.995;             // geometric, per iteration
};

struct SolveParams {
  double alpha_t = 0.5;  // max relative travel-time increase per block
  double alpha_p = 0.15;  // max relative school-size increase
  GroupPair pair = GroupPair::white_nonwhite();
  SolverMode mode = SolverMode::kHeuristic;
  HeuristicKnobs heuristic;
  std::uint64_t seed = 0;
  std::size_t exact_size_cap = 12;

  void validate() const;
};

struct Violation {
  BlockIndex block = -1;
  SchoolIndex school = -1;
  std::string detail;
};

struct FeasibilityReport {
  std::vector<Violation> totality;
  std::vector<Violation> travel;
  std::vector<Violation> school_size;
  std::vector<Violation> contiguity;

  bool ok() const {
    return totality.empty() && travel.empty() && school_size.empty() &&
           contiguity.empty();
  }
  std::string summary() const;
};

struct SolveResult {
  Assignment assignment;
  DissimilarityValue objective;  // on the counts handed to the solver
  std::uint64_t iterations = 0;  // search nodes (exact) or moves (heuristic)
  double wall_seconds = 0.0;
  bool proven_optimal = false;
  SolverMode mode = SolverMode::kHeuristic;
};

// Schools whose travel time from `block` stays within (1 + alpha_t) of the
// current one. Always contains the current school.
std::vector<SchoolIndex> candidate_schools(const District& district,
                                           BlockIndex block,
                                           const SolveParams& params);

// Checks the one-school, travel, school-size and contiguity constraints.
// `counts` must be the matrix the solver saw: school sizes are measured
// with its totals. Never throws on a violated constraint.
FeasibilityReport check_feasible(const District& district,
                                 const CountsMatrix& counts,
                                 const Assignment& assignment,
                                 const SolveParams& params);
FeasibilityReport check_feasible(const District& district,
                                 const Assignment& assignment,
                                 const SolveParams& params);

// Depth-first enumeration of every feasible assignment. Throws SizeCapError
// above params.exact_size_cap blocks. Ties resolve to the lexicographically
// smallest school vector in block-id order.
//
// The objective is evaluated directly. An external MILP backend would
// instead introduce d_s >= +/-(F_s/F - C_s/C) and minimize sum_s d_s / 2.
SolveResult solve_exact(const District& district, const CountsMatrix& counts,
                        const SolveParams& params);

// Simulated annealing over single-block reassignments that keep every
// constraint satisfied, started from the status quo on each restart. The
// best incumbent over all restarts is returned.
SolveResult solve_heuristic(const District& district,
                            const CountsMatrix& counts,
                            const SolveParams& params);

// Dispatches on params.mode.
SolveResult solve(const District& district, const CountsMatrix& counts,
                  const SolveParams& params);

}  // namespace dprezone

#endif  // DPREZONE_SOLVER_HPP_

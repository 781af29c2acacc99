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

#ifndef DPREZONE_HARNESS_HPP_
#define DPREZONE_HARNESS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dprezone/district.hpp"
#include "dprezone/metrics.hpp"
#include "dprezone/ols.hpp"
#include "dprezone/solver.hpp"

namespace dprezone {

enum class Objective { kRace, kSes };
enum class Locale { kRural, kSmallCity, kSuburban, kUrban };

std::string_view objective_name(Objective o);
Objective parse_objective(std::string_view name);
std::string_view locale_name(Locale l);
Locale parse_locale(std::string_view name);

// Called once per private replicate with exactly what the solver was
// given; used by tests to verify that solves only ever see noisy counts.
using ReplicateObserver = std::function<void(
    double epsilon, int replicate, const District& solver_view)>;

struct ExperimentConfig {
  std::vector<double> epsilons = {2.0, 4.0};
  int replicates = 200;
  SolveParams solve;  // alpha_t = 0.5, alpha_p = 0.15 by default
  std::uint64_t seed = 0;
  Objective objective = Objective::kRace;
  Locale locale = Locale::kSuburban;
  int sensitivity = 2;
  int bootstrap_resamples = 1000;
  // Execution only; never affects results.
  int workers = 1;
  ReplicateObserver observer;

  void validate() const;
};

// config.json: { epsilons, replicates, alpha_t, alpha_p, seed,
//   objective: "race"|"ses", locale, sensitivity,
//   solver: { mode, max_iters, restarts, initial_temperature, cooling,
//             exact_size_cap }, workers }
// Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

// Counts and pair for the configured objective: racial counts with
// White vs non-White, or SES counts (from the district's block-group
// variables) with low vs high SES.
struct ObjectiveSetup {
  District district;  // counts replaced for the SES objective
  GroupPair pair;
};
ObjectiveSetup prepare_objective(const District& district, Objective objective);

std::uint64_t noise_seed(std::uint64_t base_seed, double epsilon, int replicate);
std::uint64_t solver_seed(std::uint64_t base_seed);

struct DistrictFeatures {
  std::vector<std::pair<Group, double>> shares;  // racial shares of students
  std::int64_t n_students = 0;
  std::size_t n_schools = 0;
  std::size_t n_blocks = 0;
  Locale locale = Locale::kSuburban;
  double current_di = 0.0;  // on the experiment's objective
};

struct ReplicateOutcome {
  int replicate = 0;
  std::uint64_t noise_seed = 0;
  OutcomeReport report;
  Assignment assignment;
  DissimilarityValue solver_objective;  // on the noisy counts
  std::uint64_t solver_iterations = 0;
  double wall_seconds = 0.0;
};

struct GroupSummary {
  Group group;
  double mean = 0.0;
  Interval ci;
};

struct EpsilonSummary {
  double epsilon = 0.0;
  std::vector<ReplicateOutcome> replicates;
  double mean_di = 0.0;
  double median_di = 0.0;
  Interval di_ci;
  double mean_blocks_rezoned = 0.0;
  Interval blocks_rezoned_ci;
  std::vector<GroupSummary> travel_by_group;
  std::vector<GroupSummary> pct_rezoned_by_group;
  // Mean over replicates that rezoned at least one block.
  std::optional<double> mean_coincide_fraction;
  // DI reduction relative to the status quo, per replicate.
  double mean_reduction = 0.0;
  double median_reduction = 0.0;
  std::vector<double> rezone_frequency;
  Assignment modal_assignment;  // most frequent school per block
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string district_name;
  DistrictFeatures features;
  OutcomeReport current_report;
  OutcomeReport nonprivate_report;
  SolveResult nonprivate_solve;
  double nonprivate_reduction = 0.0;
  std::vector<EpsilonSummary> per_epsilon;
  std::string started_at;
  std::string finished_at;
  double wall_seconds = 0.0;
};

// Current, non-private (on ground truth) and private (on privatized
// counts, `replicates` per epsilon) scenarios, all evaluated on ground
// truth. Deterministic given the config; independent of `workers`.
ExperimentResult run_experiment(const District& district,
                                const ExperimentConfig& config);

// One solve: non-private when `epsilon` is empty, otherwise a single
// private replicate (index `replicate`).
struct SingleSolve {
  SolveResult solve;
  OutcomeReport report;
  OutcomeReport current_report;
  std::optional<double> epsilon;
};
SingleSolve run_single_solve(const District& district,
                             const ExperimentConfig& config,
                             std::optional<double> epsilon, int replicate = 0);

// results.json document (everything except wall-clock data lives outside
// the "timing" key).
nlohmann::json result_to_json(const ExperimentResult& result,
                              const District& district);
nlohmann::json outcome_to_json(const OutcomeReport& report);

// Writes results.json, metrics.csv, rezone_frequency.csv,
// assignment_<scenario>.csv and, when every block has a centroid,
// assignment.geojson.
std::vector<std::string> emit_report(const ExperimentResult& result,
                                     const District& district,
                                     const std::string& out_dir);

// metrics.csv layout: scenario, epsilon, replicate, dissimilarity,
// blocks_rezoned, travel_<group>..., pct_rezoned_<group>..., coincide,
// private_only, nonprivate_only. Numbers use 6 decimals; empty cells mark
// undefined values.
std::vector<std::string> metrics_csv_header(const std::vector<Group>& groups);

// Short epsilon label for file names ("2", "0.5").
std::string epsilon_label(double epsilon);

// --- district-level regression ---------------------------------------------

struct RegressionRow {
  std::string district;
  DistrictFeatures features;
  double gap = 0.0;  // E[DI(private)] - DI(non-private)
};

// Gap for one epsilon, or the largest gap over the configured epsilons.
RegressionRow regression_row(const ExperimentResult& result,
                             std::optional<double> epsilon = std::nullopt);
RegressionRow regression_row_from_json(const nlohmann::json& results,
                                       std::optional<double> epsilon = std::nullopt);

// Regresses the gap on an intercept, group shares, #students, #schools,
// locale indicators and the current DI. Linearly dependent columns are
// dropped left to right and reported in `dropped` / `warnings`.
RegressionResult build_regression_table(const std::vector<RegressionRow>& rows);

nlohmann::json regression_to_json(const RegressionResult& r);

// ISO-8601 UTC timestamp.
std::string utc_now();

// {"rows", "cols", "schools", "segregation_strength", "mean_block_pop",
// "seed"}; missing keys keep their defaults, unknown keys are rejected.
SyntheticParams synthetic_params_from_json(const nlohmann::json& j);

// Name, sizes, pinned blocks and per-group totals.
nlohmann::json district_summary_json(const District& district);

}  // namespace dprezone

#endif  // DPREZONE_HARNESS_HPP_

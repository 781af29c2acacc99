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

#include "dprezone/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "dprezone/csv.hpp"
#include "dprezone/error.hpp"
#include "dprezone/privacy.hpp"
#include "dprezone/ses.hpp"

namespace dprezone {

using nlohmann::json;

namespace {
constexpr std::uint64_t kNoiseTag = 0x6e6f697365ULL;   // "noise"
constexpr std::uint64_t kSolverTag = 0x736f6c7665ULL;  // "solve"
constexpr std::uint64_t kBootTag = 0x626f6f74ULL;      // "boot"
}  // namespace

std::string_view objective_name(Objective o) {
  return o == Objective::kRace ? "race" : "ses";
}

Objective parse_objective(std::string_view name) {
  if (name == "race") return Objective::kRace;
  if (name == "ses") return Objective::kSes;
  throw ValidationError("objective must be \"race\" or \"ses\"");
}

std::string_view locale_name(Locale l) {
  switch (l) {
    case Locale::kRural: return "rural";
    case Locale::kSmallCity: return "small_city";
    case Locale::kSuburban: return "suburban";
    case Locale::kUrban: return "urban";
  }
  return "suburban";
}

Locale parse_locale(std::string_view name) {
  for (Locale l : {Locale::kRural, Locale::kSmallCity, Locale::kSuburban,
                   Locale::kUrban}) {
    if (locale_name(l) == name) return l;
  }
  throw ValidationError("unknown locale '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (epsilons.empty()) throw ValidationError("epsilons must not be empty");
  for (double e : epsilons) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw ValidationError("every epsilon must be positive and finite");
    }
  }
  if (replicates < 1) throw ValidationError("replicates must be >= 1");
  if (sensitivity < 1) throw ValidationError("sensitivity must be >= 1");
  if (bootstrap_resamples < 1) {
    throw ValidationError("bootstrap_resamples must be >= 1");
  }
  if (workers < 1) throw ValidationError("workers must be >= 1");
  solve.validate();
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "epsilons", "replicates", "alpha_t",     "alpha_p",
      "seed",     "objective",  "solver",      "locale",
      "workers",  "sensitivity", "bootstrap_resamples"};
  static const std::set<std::string> kSolverKeys = {
      "mode",        "max_iters", "restarts", "initial_temperature",
      "cooling",     "exact_size_cap"};
  ExperimentConfig c;
  try {
    for (const auto& [key, _] : j.items()) {
      if (!kKeys.count(key)) {
        throw ValidationError("unknown config key '" + key + "'");
      }
    }
    if (j.contains("epsilons")) {
      c.epsilons = j.at("epsilons").get<std::vector<double>>();
    }
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
    if (j.contains("alpha_t")) c.solve.alpha_t = j.at("alpha_t").get<double>();
    if (j.contains("alpha_p")) c.solve.alpha_p = j.at("alpha_p").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("objective")) {
      c.objective = parse_objective(j.at("objective").get<std::string>());
    }
    if (j.contains("locale")) {
      c.locale = parse_locale(j.at("locale").get<std::string>());
    }
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("sensitivity")) c.sensitivity = j.at("sensitivity").get<int>();
    if (j.contains("bootstrap_resamples")) {
      c.bootstrap_resamples = j.at("bootstrap_resamples").get<int>();
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      if (!s.is_object()) throw ValidationError("solver must be an object");
      for (const auto& [key, _] : s.items()) {
        if (!kSolverKeys.count(key)) {
          throw ValidationError("unknown solver key '" + key + "'");
        }
      }
      if (s.contains("mode")) {
        c.solve.mode = parse_solver_mode(s.at("mode").get<std::string>());
      }
      if (s.contains("max_iters")) {
        c.solve.heuristic.max_iters = s.at("max_iters").get<std::uint64_t>();
      }
      if (s.contains("restarts")) {
        c.solve.heuristic.restarts = s.at("restarts").get<int>();
      }
      if (s.contains("initial_temperature")) {
        c.solve.heuristic.initial_temperature =
            s.at("initial_temperature").get<double>();
      }
      if (s.contains("cooling")) {
        c.solve.heuristic.cooling = s.at("cooling").get<double>();
      }
      if (s.contains("exact_size_cap")) {
        c.solve.exact_size_cap = s.at("exact_size_cap").get<std::size_t>();
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  c.solve.pair = c.objective == Objective::kRace ? GroupPair::white_nonwhite()
                                                 : GroupPair::low_high_ses();
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  return json{
      {"epsilons", c.epsilons},
      {"replicates", c.replicates},
      {"alpha_t", c.solve.alpha_t},
      {"alpha_p", c.solve.alpha_p},
      {"seed", c.seed},
      {"objective", objective_name(c.objective)},
      {"locale", locale_name(c.locale)},
      {"sensitivity", c.sensitivity},
      {"bootstrap_resamples", c.bootstrap_resamples},
      {"solver",
       {{"mode", solver_mode_name(c.solve.mode)},
        {"max_iters", c.solve.heuristic.max_iters},
        {"restarts", c.solve.heuristic.restarts},
        {"initial_temperature", c.solve.heuristic.initial_temperature},
        {"cooling", c.solve.heuristic.cooling},
        {"exact_size_cap", c.solve.exact_size_cap}}},
  };
}

ObjectiveSetup prepare_objective(const District& district, Objective objective) {
  if (objective == Objective::kRace) {
    return {district, GroupPair::white_nonwhite()};
  }
  if (district.ses_vars().empty()) {
    throw ValidationError("SES objective needs block-group SES variables");
  }
  const auto scores = compute_ses(district.ses_vars());
  return {district.with_counts(build_ses_counts(district, scores)),
          GroupPair::low_high_ses()};
}

std::uint64_t noise_seed(std::uint64_t base_seed, double epsilon,
                         int replicate) {
  // base ^ hash(epsilon, replicate)
  return base_seed ^
         splitmix64(kNoiseTag ^ std::bit_cast<std::uint64_t>(epsilon) ^
                    splitmix64(static_cast<std::uint64_t>(replicate)));
}

std::uint64_t solver_seed(std::uint64_t base_seed) {
  return derive_seed(base_seed, kSolverTag, 0);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string epsilon_label(double epsilon) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", epsilon);
  return buf;
}

namespace {

DistrictFeatures compute_features(const District& racial,
                                  const OutcomeReport& current, Locale locale) {
  DistrictFeatures f;
  const auto& counts = racial.counts();
  f.n_students = counts.district_total();
  for (std::size_t g = 0; g < counts.groups().size(); ++g) {
    const double share =
        f.n_students > 0 ? static_cast<double>(counts.group_total(g)) /
                               static_cast<double>(f.n_students)
                         : 0.0;
    f.shares.push_back({counts.groups()[g], share});
  }
  f.n_schools = racial.num_schools();
  f.n_blocks = racial.num_blocks();
  f.locale = locale;
  f.current_di = current.dissimilarity;
  return f;
}

double reduction(double current, double value) {
  return current > 0.0 ? (current - value) / current : 0.0;
}

std::vector<GroupSummary> summarize_groups(
    const std::vector<ReplicateOutcome>& reps, bool travel, int resamples,
    Rng& rng) {
  std::vector<GroupSummary> out;
  if (reps.empty()) return out;
  const auto& first =
      travel ? reps[0].report.travel_by_group : reps[0].report.pct_rezoned_by_group;
  for (std::size_t g = 0; g < first.size(); ++g) {
    std::vector<double> xs;
    for (const auto& r : reps) {
      const auto& v =
          travel ? r.report.travel_by_group : r.report.pct_rezoned_by_group;
      xs.push_back(v[g].metric.value);
    }
    out.push_back({first[g].group, mean(xs),
                   bootstrap_ci(xs, 0.95, resamples, rng)});
  }
  return out;
}

Assignment modal(const std::vector<ReplicateOutcome>& reps, std::size_t nb,
                 std::size_t ns) {
  Assignment a;
  a.school_of.assign(nb, 0);
  std::vector<int> tally(ns);
  for (std::size_t b = 0; b < nb; ++b) {
    std::fill(tally.begin(), tally.end(), 0);
    for (const auto& r : reps) ++tally[r.assignment.school_of[b]];
    a.school_of[b] = static_cast<SchoolIndex>(
        std::max_element(tally.begin(), tally.end()) - tally.begin());
  }
  return a;
}

// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first
// failure in index order.
template <typename Fn>
void parallel_for(int n, int workers, Fn fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(workers, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SolveParams params_for(const ExperimentConfig& config, const GroupPair& pair) {
  SolveParams p = config.solve;
  p.pair = pair;
  p.seed = solver_seed(config.seed);
  return p;
}

}  // namespace

ExperimentResult run_experiment(const District& district,
                                const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config = config;
  result.config.observer = nullptr;
  result.district_name = district.name();
  result.started_at = utc_now();

  const ObjectiveSetup setup = prepare_objective(district, config.objective);
  const District& truth = setup.district;
  const CountsMatrix& ground = truth.counts();
  const SolveParams params = params_for(config, setup.pair);

  result.current_report = evaluate_outcome(truth, truth.current(), setup.pair);
  result.features = compute_features(district, result.current_report,
                                     config.locale);

  result.nonprivate_solve = solve(truth, ground, params);
  result.nonprivate_report =
      evaluate_outcome(truth, result.nonprivate_solve.assignment, setup.pair);
  result.nonprivate_reduction =
      reduction(result.current_report.dissimilarity,
                result.nonprivate_report.dissimilarity);

  for (std::size_t ei = 0; ei < config.epsilons.size(); ++ei) {
    const double eps = config.epsilons[ei];
    EpsilonSummary summary;
    summary.epsilon = eps;
    summary.replicates.resize(static_cast<std::size_t>(config.replicates));

    parallel_for(config.replicates, config.workers, [&](int r) {
      ReplicateOutcome& out = summary.replicates[r];
      out.replicate = r;
      out.noise_seed = noise_seed(config.seed, eps, r);
      PrivacyParams privacy{eps, config.sensitivity, out.noise_seed};
      Rng rng(out.noise_seed);
      // The solver only ever sees this view: same topology, noisy counts.
      const District solver_view =
          truth.with_counts(privatize_counts(ground, privacy, rng));
      if (config.observer) config.observer(eps, r, solver_view);
      SolveResult s = solve(solver_view, solver_view.counts(), params);
      out.solver_objective = s.objective;
      out.solver_iterations = s.iterations;
      out.wall_seconds = s.wall_seconds;
      out.assignment = std::move(s.assignment);
      // Outcome measures on ground truth.
      out.report = evaluate_outcome(truth, out.assignment, setup.pair,
                                    &result.nonprivate_solve.assignment);
    });

    Rng boot(derive_seed(config.seed, kBootTag, ei));
    std::vector<double> di, rezoned, reductions, coincide;
    std::vector<Assignment> assignments;
    for (const auto& r : summary.replicates) {
      di.push_back(r.report.dissimilarity);
      rezoned.push_back(static_cast<double>(r.report.blocks_rezoned));
      reductions.push_back(
          reduction(result.current_report.dissimilarity, r.report.dissimilarity));
      if (r.report.overlap && r.report.overlap->coincide_fraction) {
        coincide.push_back(*r.report.overlap->coincide_fraction);
      }
      assignments.push_back(r.assignment);
    }
    summary.mean_di = mean(di);
    summary.median_di = median(di);
    summary.di_ci = bootstrap_ci(di, 0.95, config.bootstrap_resamples, boot);
    summary.mean_blocks_rezoned = mean(rezoned);
    summary.blocks_rezoned_ci =
        bootstrap_ci(rezoned, 0.95, config.bootstrap_resamples, boot);
    summary.travel_by_group = summarize_groups(
        summary.replicates, true, config.bootstrap_resamples, boot);
    summary.pct_rezoned_by_group = summarize_groups(
        summary.replicates, false, config.bootstrap_resamples, boot);
    if (!coincide.empty()) summary.mean_coincide_fraction = mean(coincide);
    summary.mean_reduction = mean(reductions);
    summary.median_reduction = median(reductions);
    summary.rezone_frequency = rezone_frequency(assignments, truth.current());
    summary.modal_assignment =
        modal(summary.replicates, truth.num_blocks(), truth.num_schools());
    result.per_epsilon.push_back(std::move(summary));
  }

  result.finished_at = utc_now();
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

SingleSolve run_single_solve(const District& district,
                             const ExperimentConfig& config,
                             std::optional<double> epsilon, int replicate) {
  config.validate();
  const ObjectiveSetup setup = prepare_objective(district, config.objective);
  const District& truth = setup.district;
  const SolveParams params = params_for(config, setup.pair);
  SingleSolve out;
  out.epsilon = epsilon;
  out.current_report = evaluate_outcome(truth, truth.current(), setup.pair);
  if (!epsilon) {
    out.solve = solve(truth, truth.counts(), params);
  } else {
    PrivacyParams privacy{*epsilon, config.sensitivity,
                          noise_seed(config.seed, *epsilon, replicate)};
    Rng rng(privacy.seed);
    const District view =
        truth.with_counts(privatize_counts(truth.counts(), privacy, rng));
    out.solve = solve(view, view.counts(), params);
  }
  out.report = evaluate_outcome(truth, out.solve.assignment, setup.pair);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json interval_json(const Interval& i) { return json{{"lo", i.lo}, {"hi", i.hi}}; }

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json group_metrics_json(const std::vector<GroupMetric>& metrics) {
  json out = json::object();
  for (const auto& m : metrics) {
    out[std::string(group_label(m.group))] = m.metric.value;
  }
  return out;
}

json warnings_json(const OutcomeReport& r) {
  json w = json::array();
  for (const auto& m : r.travel_by_group) {
    if (m.metric.warning) {
      w.push_back("travel_" + std::string(group_label(m.group)) +
                  ": group has no students; reported as 0");
    }
  }
  for (const auto& m : r.pct_rezoned_by_group) {
    if (m.metric.warning) {
      w.push_back("pct_rezoned_" + std::string(group_label(m.group)) +
                  ": group has no students; reported as 0");
    }
  }
  return w;
}

json group_summary_json(const std::vector<GroupSummary>& gs) {
  json out = json::object();
  for (const auto& g : gs) {
    out[std::string(group_label(g.group))] =
        json{{"mean", g.mean}, {"ci", interval_json(g.ci)}};
  }
  return out;
}

json features_json(const DistrictFeatures& f) {
  json shares = json::object();
  for (const auto& [g, s] : f.shares) shares[std::string(group_label(g))] = s;
  return json{{"shares", shares},
              {"n_students", f.n_students},
              {"n_schools", f.n_schools},
              {"n_blocks", f.n_blocks},
              {"locale", locale_name(f.locale)},
              {"current_di", f.current_di}};
}

DistrictFeatures features_from_json(const json& j) {
  DistrictFeatures f;
  for (const auto& [label, share] : j.at("shares").items()) {
    f.shares.push_back({parse_group(label), share.get<double>()});
  }
  // Keep the canonical group order regardless of JSON key order.
  std::sort(f.shares.begin(), f.shares.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  f.n_students = j.at("n_students").get<std::int64_t>();
  f.n_schools = j.at("n_schools").get<std::size_t>();
  f.n_blocks = j.value("n_blocks", std::size_t{0});
  f.locale = parse_locale(j.at("locale").get<std::string>());
  f.current_di = j.at("current_di").get<double>();
  return f;
}

json solve_json(const SolveResult& s) {
  return json{{"mode", solver_mode_name(s.mode)},
              {"objective", s.objective.value()},
              {"objective_numerator", s.objective.numerator},
              {"iterations", s.iterations},
              {"proven_optimal", s.proven_optimal}};
}

}  // namespace

json outcome_to_json(const OutcomeReport& r) {
  json j{{"dissimilarity", r.dissimilarity},
         {"blocks_rezoned", r.blocks_rezoned},
         {"travel_by_group", group_metrics_json(r.travel_by_group)},
         {"pct_rezoned_by_group", group_metrics_json(r.pct_rezoned_by_group)},
         {"warnings", warnings_json(r)}};
  if (r.overlap) {
    const auto& o = *r.overlap;
    j["rezone_overlap"] = json{
        {"private_rezoned", o.private_rezoned},
        {"nonprivate_rezoned", o.nonprivate_rezoned},
        {"coincide", o.coincide},
        {"private_only", o.private_only},
        {"nonprivate_only", o.nonprivate_only},
        {"coincide_with_nonprivate", optional_json(o.coincide_fraction)},
        {"private_only_fraction", optional_json(o.private_only_fraction)},
        {"nonprivate_only_fraction", optional_json(o.nonprivate_only_fraction)}};
  }
  return j;
}

json result_to_json(const ExperimentResult& r, const District& district) {
  json priv = json::array();
  json private_mean = json::object();
  for (const auto& e : r.per_epsilon) {
    json reps = json::array();
    for (const auto& rep : e.replicates) {
      reps.push_back(json{{"replicate", rep.replicate},
                          {"noise_seed", rep.noise_seed},
                          {"solver_objective", rep.solver_objective.value()},
                          {"solver_iterations", rep.solver_iterations},
                          {"report", outcome_to_json(rep.report)}});
    }
    const std::string label = epsilon_label(e.epsilon);
    private_mean[label] = e.mean_di;
    priv.push_back(json{
        {"epsilon", e.epsilon},
        {"mean_di", e.mean_di},
        {"median_di", e.median_di},
        {"di_ci", interval_json(e.di_ci)},
        {"mean_blocks_rezoned", e.mean_blocks_rezoned},
        {"blocks_rezoned_ci", interval_json(e.blocks_rezoned_ci)},
        {"travel_by_group", group_summary_json(e.travel_by_group)},
        {"pct_rezoned_by_group", group_summary_json(e.pct_rezoned_by_group)},
        {"mean_coincide_fraction", optional_json(e.mean_coincide_fraction)},
        {"mean_reduction", e.mean_reduction},
        {"median_reduction", e.median_reduction},
        {"gap_vs_nonprivate", e.mean_di - r.nonprivate_report.dissimilarity},
        {"replicates", reps}});
  }
  json j{
      {"format", "dp-rezone/results/v1"},
      {"district",
       {{"name", r.district_name},
        {"blocks", district.num_blocks()},
        {"schools", district.num_schools()},
        {"pinned_blocks", district.num_pinned()},
        {"features", features_json(r.features)}}},
      {"config", config_to_json(r.config)},
      {"provenance",
       {{"base_seed", r.config.seed},
        {"solver_seed", solver_seed(r.config.seed)},
        {"noise_seed",
         "base ^ splitmix64(0x6e6f697365 ^ bits(epsilon) ^ splitmix64(r))"},
        {"rng", "mt19937_64 seeded through splitmix64"},
        {"solver_mode", solver_mode_name(r.config.solve.mode)},
        {"pair", r.config.solve.pair.describe()},
        {"travel_statistic", "student-weighted mean minutes"},
        {"bootstrap", "percentile, mean"}}},
      {"current", outcome_to_json(r.current_report)},
      {"nonprivate",
       {{"report", outcome_to_json(r.nonprivate_report)},
        {"solve", solve_json(r.nonprivate_solve)},
        {"reduction", r.nonprivate_reduction}}},
      {"private", priv},
      {"summary",
       {{"current_di", r.current_report.dissimilarity},
        {"nonprivate_di", r.nonprivate_report.dissimilarity},
        {"private_mean_di", private_mean},
        {"nonprivate_reduction", r.nonprivate_reduction}}},
      {"timing",
       {{"started_at", r.started_at},
        {"finished_at", r.finished_at},
        {"wall_seconds", r.wall_seconds}}},
  };
  return j;
}

std::vector<std::string> metrics_csv_header(const std::vector<Group>& groups) {
  std::vector<std::string> h = {"scenario", "epsilon", "replicate",
                                "dissimilarity", "blocks_rezoned"};
  for (Group g : groups) h.push_back("travel_" + std::string(group_label(g)));
  for (Group g : groups) {
    h.push_back("pct_rezoned_" + std::string(group_label(g)));
  }
  h.insert(h.end(), {"coincide", "private_only", "nonprivate_only"});
  return h;
}

namespace {

std::vector<std::string> metrics_row(const std::string& scenario,
                                     const std::string& epsilon,
                                     const std::string& replicate,
                                     const OutcomeReport& r) {
  std::vector<std::string> row = {scenario, epsilon, replicate,
                                  csv::fixed6(r.dissimilarity),
                                  std::to_string(r.blocks_rezoned)};
  for (const auto& m : r.travel_by_group) row.push_back(csv::fixed6(m.metric.value));
  for (const auto& m : r.pct_rezoned_by_group) {
    row.push_back(csv::fixed6(m.metric.value));
  }
  auto opt = [](const std::optional<double>& v) {
    return v ? csv::fixed6(*v) : std::string();
  };
  if (r.overlap) {
    row.push_back(opt(r.overlap->coincide_fraction));
    row.push_back(opt(r.overlap->private_only_fraction));
    row.push_back(opt(r.overlap->nonprivate_only_fraction));
  } else {
    row.insert(row.end(), 3, std::string());
  }
  return row;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InternalError("cannot write " + path);
  out << text;
  if (!out) throw InternalError("write failed: " + path);
}

}  // namespace

std::vector<std::string> emit_report(const ExperimentResult& r,
                                     const District& district,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InternalError("cannot create " + out_dir + ": " + ec.message());
  std::vector<std::string> files;
  auto path = [&](const std::string& name) {
    files.push_back(name);
    return (fs::path(out_dir) / name).string();
  };

  write_text(path("results.json"), result_to_json(r, district).dump(2) + "\n");

  {
    std::vector<Group> groups;
    for (const auto& m : r.current_report.travel_by_group) groups.push_back(m.group);
    std::ofstream out(path("metrics.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw InternalError("cannot write metrics.csv");
    csv::write_row(out, metrics_csv_header(groups));
    csv::write_row(out, metrics_row("current", "", "", r.current_report));
    csv::write_row(out, metrics_row("nonprivate", "", "", r.nonprivate_report));
    for (const auto& e : r.per_epsilon) {
      for (const auto& rep : e.replicates) {
        csv::write_row(out, metrics_row("private", epsilon_label(e.epsilon),
                                        std::to_string(rep.replicate),
                                        rep.report));
      }
    }
  }

  {
    std::ofstream out(path("rezone_frequency.csv"),
                      std::ios::binary | std::ios::trunc);
    if (!out) throw InternalError("cannot write rezone_frequency.csv");
    csv::write_row(out, {"block_id", "epsilon", "fraction"});
    for (const auto& e : r.per_epsilon) {
      for (std::size_t b = 0; b < district.num_blocks(); ++b) {
        csv::write_row(out, {district.blocks()[b].id, epsilon_label(e.epsilon),
                             csv::fixed6(e.rezone_frequency[b])});
      }
    }
  }

  write_assignment_csv(district, district.current(),
                       path("assignment_current.csv"));
  write_assignment_csv(district, r.nonprivate_solve.assignment,
                       path("assignment_nonprivate.csv"));
  for (const auto& e : r.per_epsilon) {
    write_assignment_csv(
        district, e.modal_assignment,
        path("assignment_private_eps" + epsilon_label(e.epsilon) + ".csv"));
  }

  const bool all_centroids =
      std::all_of(district.blocks().begin(), district.blocks().end(),
                  [](const Block& b) { return b.centroid.has_value(); });
  if (all_centroids) {
    json features = json::array();
    const auto& counts = district.counts();
    for (std::size_t b = 0; b < district.num_blocks(); ++b) {
      const Block& blk = district.blocks()[b];
      json props{{"block_id", blk.id},
                 {"block_group_id", blk.block_group_id},
                 {"n_total", counts.total(b)},
                 {"current_school",
                  district.schools()[district.current().school_of[b]].id},
                 {"nonprivate_school",
                  district.schools()[r.nonprivate_solve.assignment.school_of[b]].id}};
      for (std::size_t g = 0; g < counts.groups().size(); ++g) {
        props["n_" + std::string(group_label(counts.groups()[g]))] =
            counts.at(g, b);
      }
      for (const auto& e : r.per_epsilon) {
        const std::string label = epsilon_label(e.epsilon);
        props["private_school_eps" + label] =
            district.schools()[e.modal_assignment.school_of[b]].id;
        props["rezone_probability_eps" + label] = e.rezone_frequency[b];
      }
      features.push_back(json{
          {"type", "Feature"},
          {"geometry",
           {{"type", "Point"},
            {"coordinates", {blk.centroid->lon, blk.centroid->lat}}}},
          {"properties", props}});
    }
    json fc{{"type", "FeatureCollection"}, {"features", features}};
    write_text(path("assignment.geojson"), fc.dump() + "\n");
  }
  return files;
}

// ---------------------------------------------------------------------------
// Regression

RegressionRow regression_row(const ExperimentResult& r,
                             std::optional<double> epsilon) {
  RegressionRow row;
  row.district = r.district_name;
  row.features = r.features;
  bool found = false;
  for (const auto& e : r.per_epsilon) {
    if (epsilon && e.epsilon != *epsilon) continue;
    const double gap = e.mean_di - r.nonprivate_report.dissimilarity;
    if (!found || gap > row.gap) row.gap = gap;
    found = true;
  }
  if (!found) throw ValidationError("requested epsilon is not in the result");
  return row;
}

RegressionRow regression_row_from_json(const json& j,
                                       std::optional<double> epsilon) {
  try {
    RegressionRow row;
    row.district = j.at("district").at("name").get<std::string>();
    row.features = features_from_json(j.at("district").at("features"));
    const double nonprivate = j.at("summary").at("nonprivate_di").get<double>();
    bool found = false;
    for (const auto& e : j.at("private")) {
      const double eps = e.at("epsilon").get<double>();
      if (epsilon && eps != *epsilon) continue;
      const double gap = e.at("mean_di").get<double>() - nonprivate;
      if (!found || gap > row.gap) row.gap = gap;
      found = true;
    }
    if (!found) throw ValidationError("requested epsilon is not in the result");
    return row;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed results.json: ") + e.what());
  }
}

RegressionResult build_regression_table(const std::vector<RegressionRow>& rows) {
  if (rows.empty()) throw ValidationError("regression needs districts");
  std::vector<std::string> names = {"intercept"};
  for (const auto& [g, _] : rows[0].features.shares) {
    names.push_back("pct_" + std::string(group_label(g)));
  }
  names.insert(names.end(), {"n_students", "n_schools", "locale_rural",
                             "locale_small_city", "locale_suburban",
                             "locale_urban", "current_di"});
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = rows[i].features;
    if (static_cast<Eigen::Index>(f.shares.size()) + 8 != p) {
      throw ValidationError("districts report different group sets");
    }
    Eigen::Index c = 0;
    X(i, c++) = 1.0;
    for (const auto& [_, share] : f.shares) X(i, c++) = share;
    X(i, c++) = static_cast<double>(f.n_students);
    X(i, c++) = static_cast<double>(f.n_schools);
    for (Locale l : {Locale::kRural, Locale::kSmallCity, Locale::kSuburban,
                     Locale::kUrban}) {
      X(i, c++) = f.locale == l ? 1.0 : 0.0;
    }
    X(i, c++) = f.current_di;
    y(i) = rows[i].gap;
  }

  // Scale-aware rank repair on standardized copies of the columns.
  Eigen::MatrixXd scaled = X;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = scaled.col(j).cwiseAbs().maxCoeff();
    if (m > 0.0) scaled.col(j) /= m;
  }
  const auto kept = independent_columns(scaled, 1e-9);
  std::vector<std::string> kept_names, dropped;
  std::vector<std::string> warnings;
  std::set<int> kept_set(kept.begin(), kept.end());
  for (Eigen::Index j = 0; j < p; ++j) {
    if (kept_set.count(static_cast<int>(j))) {
      kept_names.push_back(names[j]);
    } else {
      dropped.push_back(names[j]);
      warnings.push_back("dropped '" + names[j] +
                         "': linearly dependent on earlier columns");
    }
  }
  Eigen::MatrixXd Xk(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) Xk.col(k) = X.col(kept[k]);
  RegressionResult result = ols_regress(Xk, y, kept_names);
  result.dropped = std::move(dropped);
  result.warnings = std::move(warnings);
  return result;
}

json regression_to_json(const RegressionResult& r) {
  json terms = json::array();
  for (const auto& t : r.terms) {
    terms.push_back(json{{"feature", t.name},
                         {"coefficient", t.coefficient},
                         {"std_error", t.std_error},
                         {"t", t.t},
                         {"p", t.p},
                         {"ci_lo", t.ci_lo},
                         {"ci_hi", t.ci_hi}});
  }
  return json{{"terms", terms},
              {"r_squared", r.r_squared},
              {"adj_r_squared", r.adj_r_squared},
              {"n", r.n},
              {"df", r.df},
              {"dropped", r.dropped},
              {"warnings", r.warnings}};
}

SyntheticParams synthetic_params_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("synthetic params must be an object");
  static const std::set<std::string> kKeys = {
      "rows", "cols", "schools", "segregation_strength", "mean_block_pop",
      "seed"};
  SyntheticParams p;
  try {
    for (const auto& [key, _] : j.items()) {
      if (!kKeys.count(key)) {
        throw ValidationError("unknown synthetic key '" + key + "'");
      }
    }
    p.rows = j.value("rows", p.rows);
    p.cols = j.value("cols", p.cols);
    p.n_schools = j.value("schools", p.n_schools);
    p.segregation_strength =
        j.value("segregation_strength", p.segregation_strength);
    p.mean_block_pop = j.value("mean_block_pop", p.mean_block_pop);
    p.seed = j.value("seed", p.seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed synthetic params: ") + e.what());
  }
  return p;
}

json district_summary_json(const District& district) {
  const auto& counts = district.counts();
  json totals = json::object();
  for (std::size_t g = 0; g < counts.groups().size(); ++g) {
    totals[std::string(group_label(counts.groups()[g]))] = counts.group_total(g);
  }
  totals["total"] = counts.district_total();
  json schools = json::array();
  for (const auto& s : district.schools()) {
    schools.push_back(json{{"school_id", s.id},
                           {"name", s.name},
                           {"root_block_id", district.blocks()[s.root].id}});
  }
  return json{{"name", district.name()},
              {"blocks", district.num_blocks()},
              {"schools", district.num_schools()},
              {"pinned_blocks", district.num_pinned()},
              {"has_ses", !district.ses_vars().empty()},
              {"counts", totals},
              {"school_list", schools}};
}

}  // namespace dprezone

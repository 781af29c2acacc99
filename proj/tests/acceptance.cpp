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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dprezone/district.hpp"
#include "dprezone/harness.hpp"
#include "dprezone/metrics.hpp"
#include "dprezone/ols.hpp"
#include "dprezone/privacy.hpp"
#include "dprezone/rng.hpp"
#include "dprezone/ses.hpp"
#include "dprezone/solver.hpp"
#include "ols_fixture.hpp"
#include "test_support.hpp"

#ifndef DPR_CLI_PATH
#error "DPR_CLI_PATH must be defined"
#endif

namespace {

using namespace dprezone;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Variance of the two-sided geometric at epsilon 4, sensitivity 2.
Outcome geometric_variance() {
  const auto t0 = Clock::now();
  const double alpha = geometric_alpha({4.0, 2, 0});
  const double expect = variance_two_sided_geometric(alpha);
  TwoSidedGeometric g(alpha);
  Rng rng(derive_seed(1, 0xacc1, 0));
  const int n = 1000000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(g(rng));
    sum += x;
    sum2 += x * x;
  }
  const double m = sum / n;
  const double var = sum2 / n - m * m;
  const double rel = std::abs(var - expect) / expect;
  const double secs = seconds_since(t0);
  return {rel <= 0.02 && std::abs(expect - 0.3623) < 5e-4 && secs < 10.0,
          fmt("empirical %.5f vs %.5f (rel %.4f, tol 0.02), %.2fs (limit 10s)",
              var, expect, rel, secs)};
}

// 2. pmf for |k| <= 5 within 3 standard errors.
Outcome geometric_pmf() {
  const int n = 1000000;
  double worst = 0;
  bool ok = true;
  for (double alpha : {std::exp(1.0), std::exp(2.0)}) {
    TwoSidedGeometric g(alpha);
    Rng rng(derive_seed(2, 0xacc2, static_cast<std::uint64_t>(alpha * 1000)));
    std::vector<long> hist(11, 0);
    for (int i = 0; i < n; ++i) {
      const auto k = g(rng);
      if (k >= -5 && k <= 5) ++hist[k + 5];
    }
    for (int k = -5; k <= 5; ++k) {
      const double p = (alpha - 1) / (alpha + 1) * std::pow(alpha, -std::abs(k));
      const double se = std::sqrt(p * (1 - p) / n);
      const double z = std::abs(hist[k + 5] / static_cast<double>(n) - p) / se;
      worst = std::max(worst, z);
      if (z > 3.0) ok = false;
    }
  }
  return {ok, fmt("max |z| = %.3f over alpha in {e, e^2}, |k| <= 5 (limit 3)", worst)};
}

// 3. No negative entries after privatization.
Outcome clamping() {
  long negatives = 0, entries = 0;
  for (double eps : {0.5, 2.0, 4.0}) {
    // 1000 blocks x 5 groups (+ total) of small counts, 17 rounds.
    CountsMatrix counts(racial_groups(), 1000);
    Rng fill(11);
    for (std::size_t b = 0; b < counts.blocks(); ++b) {
      std::int64_t total = 0;
      for (std::size_t g = 0; g < counts.groups().size(); ++g) {
        const std::int64_t c = fill.poisson(0.7);
        counts.at(g, b) = c;
        total += c;
      }
      counts.total(b) = total;
    }
    for (int round = 0; round < 17; ++round) {
      Rng rng(noise_seed(3, eps, round));
      const auto noisy = privatize_counts(counts, {eps, 2, 0}, rng);
      for (std::size_t b = 0; b < noisy.blocks(); ++b) {
        for (std::size_t g = 0; g < noisy.groups().size(); ++g) {
          ++entries;
          if (noisy.at(g, b) < 0) ++negatives;
        }
        ++entries;
        if (noisy.total(b) < 0) ++negatives;
      }
    }
  }
  return {negatives == 0 && entries >= 300000,
          fmt("%ld negative of %ld privatized entries", negatives, entries)};
}

// 4. Heuristic attains the exact optimum on small instances.
Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  int matched = 0;
  std::string first_miss;
  for (int i = 0; i < 50; ++i) {
    const District d = testing::random_tiny(derive_seed(4, 0xacc4, i), 8, 3);
    SolveParams p;
    p.alpha_t = i % 2 ? 0.5 : 2.0;
    p.alpha_p = i % 3 ? 0.15 : 1.0;
    p.seed = derive_seed(4, 0x5eed, i);
    p.heuristic.restarts = 16;
    const auto ex = solve_exact(d, d.counts(), p);
    const auto he = solve_heuristic(d, d.counts(), p);
    const bool same =
        static_cast<__int128>(ex.objective.numerator) * he.objective.focal_denominator *
                he.objective.complement_denominator ==
            static_cast<__int128>(he.objective.numerator) * ex.objective.focal_denominator *
                ex.objective.complement_denominator &&
        std::abs(ex.objective.value() - he.objective.value()) <= 1e-12;
    if (same) {
      ++matched;
    } else if (first_miss.empty()) {
      first_miss = fmt(" (first miss: instance %d, exact %.6f, heuristic %.6f)", i,
                       ex.objective.value(), he.objective.value());
    }
  }
  const double secs = seconds_since(t0);
  return {matched == 50 && secs < 60.0,
          fmt("%d/50 matched%s, %.2fs (limit 60s)", matched, first_miss.c_str(), secs)};
}

// 5. Every emitted assignment passes the independent feasibility check.
Outcome feasibility() {
  int checked = 0, ok = 0;
  std::string first_bad;
  for (int i = 0; i < 200; ++i) {
    const District d = testing::random_tiny(derive_seed(5, 0xacc5, i), 9, 4);
    SolveParams p;
    p.alpha_t = (i % 4) * 0.25;
    p.alpha_p = 0.1 + (i % 5) * 0.2;
    p.seed = i;
    p.heuristic.restarts = 2;
    // Half the instances solve on privatized counts.
    CountsMatrix counts = d.counts();
    if (i % 2) {
      Rng rng(noise_seed(5, 1.0, i));
      counts = privatize_counts(d.counts(), {1.0, 2, 0}, rng);
    }
    for (SolverMode mode : {SolverMode::kExact, SolverMode::kHeuristic}) {
      p.mode = mode;
      const auto r = solve(d, counts, p);
      const auto rep = check_feasible(d, counts, r.assignment, p);
      ++checked;
      if (rep.ok()) {
        ++ok;
      } else if (first_bad.empty()) {
        first_bad = " (first failure: instance " + std::to_string(i) + ", " +
                    std::string(solver_mode_name(mode)) + ": " + rep.summary() + ")";
      }
    }
  }
  return {ok == checked && checked == 400,
          fmt("%d/%d assignments feasible%s", ok, checked, first_bad.c_str())};
}

District frozen_fixture() {
  SyntheticParams sp;
  sp.rows = 20;
  sp.cols = 20;
  sp.n_schools = 6;
  sp.segregation_strength = 0.8;
  sp.mean_block_pop = 20;
  sp.seed = 7;
  return generate_synthetic(sp);
}

struct FixtureRun {
  ExperimentResult result;
  double seconds = 0;
};

const FixtureRun& fixture_run() {
  static const FixtureRun run = [] {
    const auto t0 = Clock::now();
    ExperimentConfig cfg;
    cfg.replicates = 50;
    cfg.seed = 7;
    cfg.workers = 1;
    FixtureRun r{run_experiment(frozen_fixture(), cfg), 0};
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

const EpsilonSummary& at(const ExperimentResult& r, double eps) {
  for (const auto& e : r.per_epsilon)
    if (e.epsilon == eps) return e;
  std::abort();
}

std::vector<double> column(const EpsilonSummary& e, bool blocks) {
  std::vector<double> xs;
  for (const auto& r : e.replicates)
    xs.push_back(blocks ? static_cast<double>(r.report.blocks_rezoned)
                        : r.report.dissimilarity);
  return xs;
}

// 6. Mean ground-truth DI ordering across budgets.
Outcome privacy_trend() {
  const auto& fr = fixture_run();
  const auto& r = fr.result;
  const double cur = r.current_report.dissimilarity;
  const double np = r.nonprivate_report.dissimilarity;
  const double e2 = at(r, 2.0).mean_di, e4 = at(r, 4.0).mean_di;
  std::vector<double> gap = column(at(r, 2.0), false);
  for (double& g : gap) g -= np;
  Rng rng(derive_seed(6, 0xacc6, 0));
  const Interval ci = bootstrap_ci(gap, 0.95, 2000, rng);
  const bool ok = np <= e4 && e4 <= e2 && e2 <= cur && ci.lo > 0 && fr.seconds < 600;
  return {ok, fmt("DI nonprivate %.4f <= eps4 %.4f <= eps2 %.4f <= current %.4f; "
                  "eps2 gap 95%% CI [%.4f, %.4f]; %.1fs (limit 600s)",
                  np, e4, e2, cur, ci.lo, ci.hi, fr.seconds)};
}

// 7. Fewer blocks rezoned under stronger privacy.
Outcome rezone_attenuation() {
  const auto& r = fixture_run().result;
  const auto b2 = column(at(r, 2.0), true), b4 = column(at(r, 4.0), true);
  const double np = static_cast<double>(r.nonprivate_report.blocks_rezoned);
  Rng rng(derive_seed(7, 0xacc7, 0));
  const Interval d42 = bootstrap_diff_ci(b4, b2, 0.95, 2000, rng);
  std::vector<double> short4 = b4;
  for (double& x : short4) x = np - x;
  const Interval dn4 = bootstrap_ci(short4, 0.95, 2000, rng);
  const bool ok = d42.lo > 0 && dn4.lo > 0;
  return {ok, fmt("blocks rezoned eps2 %.2f < eps4 %.2f < nonprivate %.0f; "
                  "95%% CI eps4-eps2 [%.2f, %.2f], nonprivate-eps4 [%.2f, %.2f]",
                  mean(b2), mean(b4), np, d42.lo, d42.hi, dn4.lo, dn4.hi)};
}

// 8. OLS against the high-precision oracle.
Outcome ols() {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  testing::ols_fixture(X, y);
  const auto r = ols_regress(X, y, {"c", "x1", "x2", "x3", "x4"});
  double worst = std::abs(r.adj_r_squared - testing::kAdjR2);
  for (int j = 0; j < 5; ++j) {
    const auto& t = r.terms[j];
    const auto& e = testing::kRef[j];
    for (double diff : {t.coefficient - e.b, t.std_error - e.se, t.t - e.t,
                        t.p - e.p, t.ci_lo - e.lo, t.ci_hi - e.hi})
      worst = std::max(worst, std::abs(diff));
  }
  Eigen::MatrixXd Xn(12, 3);
  Eigen::VectorXd yn(12);
  for (int i = 0; i < 12; ++i) {
    Xn.row(i) << 1.0, i * 0.25, (i * 5 % 7) - 3.0;
    yn(i) = -1.25 + 0.5 * Xn(i, 1) + 2.0 * Xn(i, 2);
  }
  const auto rn = ols_regress(Xn, yn, {"c", "a", "b"});
  const double noiseless = std::max({std::abs(rn.terms[0].coefficient + 1.25),
                                     std::abs(rn.terms[1].coefficient - 0.5),
                                     std::abs(rn.terms[2].coefficient - 2.0)});
  return {worst <= 1e-8 && noiseless <= 1e-10,
          fmt("max oracle deviation %.2e (tol 1e-8), noiseless deviation %.2e "
              "(tol 1e-10)", worst, noiseless)};
}

// 9. SES standardization properties.
Outcome ses() {
  Rng rng(derive_seed(9, 0xacc9, 0));
  std::vector<BlockGroupVars> v;
  for (int i = 0; i < 137; ++i)
    v.push_back({"g" + std::to_string(1000 + i), rng.uniform(), rng.uniform(),
                 rng.uniform(), rng.uniform(), 15000 + 90000 * rng.uniform()});
  const auto s = compute_ses(v);
  double worst = 0;
  for (int k = 0; k < 6; ++k) {
    double m = 0, m2 = 0;
    for (const auto& x : s) {
      const double z = k < 5 ? x.variable_z[k] : x.composite_z;
      m += z;
      m2 += z * z;
    }
    m /= s.size();
    const double sd = std::sqrt(m2 / s.size() - m * m);
    worst = std::max({worst, std::abs(m), std::abs(sd - 1.0)});
  }
  auto w = v;
  for (auto& x : w) {
    x.pct_dual_parent = 3 * x.pct_dual_parent + 1;
    x.pct_bachelors = 100 * x.pct_bachelors;
    x.pct_non_english = 0.5 * x.pct_non_english - 2;
    x.pct_owner_occupied = 7 * x.pct_owner_occupied + 0.25;
    x.median_family_income = x.median_family_income / 1000 + 3;
  }
  const auto s2 = compute_ses(w);
  int flips = 0;
  for (std::size_t i = 0; i < s.size(); ++i) flips += s[i].label != s2[i].label;
  auto c = v;
  for (auto& x : c) x.pct_non_english = 0.2;
  for (auto& x : c) x.median_family_income = 50000;
  const auto s3 = compute_ses(c);
  bool constant_zero = true;
  for (const auto& x : s3)
    constant_zero = constant_zero && x.variable_z[2] == 0.0 && x.variable_z[4] == 0.0;
  auto all = v;
  for (auto& x : all) x = {x.block_group_id, 0.4, 0.3, 0.1, 0.6, 48000};
  for (const auto& x : compute_ses(all))
    constant_zero = constant_zero && x.composite_z == 0.0 && x.label == SesLabel::kLow;
  return {worst <= 1e-9 && flips == 0 && constant_zero,
          fmt("moment deviation %.2e (tol 1e-9), %d label flips under rescaling, "
              "constant rule %s", worst, flips, constant_zero ? "holds" : "violated")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Raw bytes with the "timing" object removed.
std::string without_timing(const std::string& text) {
  const auto key = text.find("\"timing\"");
  if (key == std::string::npos) return text;
  const auto close = text.find('}', key);
  return text.substr(0, key) + text.substr(close + 1);
}

// 10. Byte-identical results across runs and worker counts.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "dpr_acceptance_det";
  fs::remove_all(root);
  const std::string cli = DPR_CLI_PATH;
  auto sh = [](const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); };
  if (sh(cli + " generate --rows 12 --cols 12 --schools 4 --segregation 0.6 --seed 10 --out " +
         (root / "d").string()) != 0)
    return {false, "generate failed"};
  const char* runs[][2] = {{"a", "1"}, {"b", "1"}, {"c", "4"}};
  for (const auto& r : runs) {
    if (sh(cli + " simulate " + (root / "d").string() +
           " --replicates 12 --seed 99 --workers " + r[1] + " --out " +
           (root / r[0]).string()) != 0)
      return {false, std::string("simulate failed for run ") + r[0]};
  }
  const std::string a = without_timing(slurp(root / "a" / "results.json"));
  const std::string b = without_timing(slurp(root / "b" / "results.json"));
  const std::string c = without_timing(slurp(root / "c" / "results.json"));
  const bool ok = !a.empty() && a == b && a == c;
  fs::remove_all(root);
  return {ok, fmt("results.json (%zu bytes without timing): rerun %s, workers 1 vs 4 %s",
                  a.size(), a == b ? "identical" : "differs",
                  a == c ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"geometric noise variance at epsilon 4", geometric_variance},
      {"geometric pmf fidelity", geometric_pmf},
      {"privatized counts are non-negative", clamping},
      {"heuristic matches exact optimum", oracle_equivalence},
      {"solver outputs are feasible", feasibility},
      {"dissimilarity ordering across budgets", privacy_trend},
      {"fewer blocks rezoned under stronger privacy", rezone_attenuation},
      {"OLS matches oracle", ols},
      {"SES standardization", ses},
      {"simulate is deterministic", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

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

// dp-rezone command-line tool. Talks to the engine only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dprezone/dprezone.h"

namespace {

using nlohmann::json;

// Exit codes.
constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

int exit_code(dpr_status s) {
  switch (s) {
    case DPR_OK: return kOk;
    case DPR_ERR_VALIDATION:
    case DPR_ERR_NOT_FOUND:
    case DPR_ERR_INVALID_ARG: return kValidation;
    default: return kRuntime;
  }
}

int fail(dpr_status s) {
  std::fprintf(stderr, "error: %s\n", dpr_last_error());
  return exit_code(s);
}

struct Owned {
  char* s = nullptr;
  ~Owned() { dpr_string_free(s); }
};

struct DistrictHandle {
  dpr_district* d = nullptr;
  ~DistrictHandle() { dpr_district_free(d); }
};

struct ConfigFlags {
  std::string config_path;
  std::vector<double> epsilons;
  int replicates = 0;
  double alpha_t = 0.0;
  double alpha_p = 0.0;
  std::uint64_t seed = 0;
  std::string objective;
  std::string mode;
  std::string locale;
  int workers = 0;
  int restarts = 0;
  std::uint64_t max_iters = 0;

  CLI::Option* o_replicates = nullptr;
  CLI::Option* o_alpha_t = nullptr;
  CLI::Option* o_alpha_p = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_workers = nullptr;
  CLI::Option* o_restarts = nullptr;
  CLI::Option* o_max_iters = nullptr;

  void add(CLI::App* app, bool experiment) {
    app->add_option("--config", config_path, "config.json to start from")
        ->check(CLI::ExistingFile);
    if (experiment) {
      app->add_option("--epsilon", epsilons, "privacy budget (repeatable)");
      o_replicates = app->add_option("--replicates", replicates,
                                     "noisy releases per epsilon");
      app->add_option("--locale", locale, "rural|small_city|suburban|urban");
      o_workers = app->add_option("--workers", workers, "replicate threads");
    }
    o_alpha_t = app->add_option("--alpha-t", alpha_t, "max travel increase");
    o_alpha_p = app->add_option("--alpha-p", alpha_p, "max school growth");
    o_seed = app->add_option("--seed", seed, "base seed");
    app->add_option("--objective", objective, "race|ses");
    app->add_option("--mode", mode, "exact|heuristic");
    o_restarts = app->add_option("--restarts", restarts, "annealing restarts");
    o_max_iters =
        app->add_option("--max-iters", max_iters, "iterations per restart");
  }

  // Throws std::runtime_error on an unreadable config file.
  json build() const {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw std::invalid_argument(config_path + ": " + e.what());
      }
    }
    if (!epsilons.empty()) j["epsilons"] = epsilons;
    if (o_replicates && o_replicates->count()) j["replicates"] = replicates;
    if (o_alpha_t->count()) j["alpha_t"] = alpha_t;
    if (o_alpha_p->count()) j["alpha_p"] = alpha_p;
    if (o_seed->count()) j["seed"] = seed;
    if (!objective.empty()) j["objective"] = objective;
    if (!locale.empty()) j["locale"] = locale;
    if (o_workers && o_workers->count()) j["workers"] = workers;
    if (!mode.empty()) j["solver"]["mode"] = mode;
    if (o_restarts->count()) j["solver"]["restarts"] = restarts;
    if (o_max_iters->count()) j["solver"]["max_iters"] = max_iters;
    return j;
  }
};

bool write_file(const std::string& path, const char* text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

int load(const std::string& dir, DistrictHandle& h) {
  const dpr_status s = dpr_district_load_dir(dir.c_str(), &h.d);
  return s == DPR_OK ? kOk : fail(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dp-rezone: privacy-aware school attendance boundary planning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dpr_version());

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic district");
  int rows = 10, cols = 10, schools = 4;
  double strength = 0.5, mean_pop = 20.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--rows", rows, "grid rows");
  gen->add_option("--cols", cols, "grid columns");
  gen->add_option("--schools", schools, "number of schools");
  gen->add_option("--segregation", strength, "planted segregation in [0,1]");
  gen->add_option("--mean-pop", mean_pop, "mean students per block");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // validate
  auto* val = app.add_subcommand("validate", "load and check a district");
  std::string val_dir;
  val->add_option("district", val_dir, "district directory")->required();

  // solve
  auto* sol = app.add_subcommand("solve", "solve one scenario");
  std::string sol_dir, sol_out;
  ConfigFlags sol_flags;
  std::optional<double> sol_eps;
  int sol_rep = 0;
  sol->add_option("district", sol_dir, "district directory")->required();
  sol->add_option("--epsilon", sol_eps, "solve on privatized counts");
  sol->add_option("--replicate", sol_rep, "noise replicate index");
  sol->add_option("--out", sol_out, "output directory");
  sol_flags.add(sol, false);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run the full experiment");
  std::string sim_dir, sim_out;
  ConfigFlags sim_flags;
  sim->add_option("district", sim_dir, "district directory")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim_flags.add(sim, true);

  // ses
  auto* ses = app.add_subcommand("ses", "score block groups and build counts");
  std::string ses_dir, ses_out;
  ses->add_option("district", ses_dir, "district directory")->required();
  ses->add_option("--out", ses_out, "output directory");

  // regress
  auto* reg = app.add_subcommand("regress", "regress the privacy gap");
  std::vector<std::string> reg_inputs;
  std::optional<double> reg_eps;
  std::string reg_out;
  reg->add_option("results", reg_inputs, "results.json files")->required();
  reg->add_option("--epsilon", reg_eps, "use this budget's gap");
  reg->add_option("--out", reg_out, "write JSON here");

  // serve
  auto* srv = app.add_subcommand("serve", "run the HTTP service");
  std::string addr, data_dir;
  int job_workers = 0;
  srv->add_option("--addr", addr, "host:port (env DP_REZONE_ADDR)");
  srv->add_option("--data-dir", data_dir, "data directory (env DP_REZONE_DATA)");
  srv->add_option("--workers", job_workers, "concurrent jobs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << dpr_version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands()[0];
    std::cerr << sub->help();
    return kValidation;
  }

  try {
    if (*gen) {
      const json params{{"rows", rows},
                        {"cols", cols},
                        {"schools", schools},
                        {"segregation_strength", strength},
                        {"mean_block_pop", mean_pop},
                        {"seed", gen_seed}};
      DistrictHandle h;
      dpr_status s = dpr_district_generate(params.dump().c_str(), &h.d);
      if (s != DPR_OK) return fail(s);
      s = dpr_district_write(h.d, gen_out.c_str());
      if (s != DPR_OK) return fail(s);
      Owned summary;
      s = dpr_district_summary(h.d, &summary.s);
      if (s != DPR_OK) return fail(s);
      std::cout << summary.s;
      return kOk;
    }
    if (*val) {
      DistrictHandle h;
      if (int rc = load(val_dir, h)) return rc;
      Owned summary;
      const dpr_status s = dpr_district_summary(h.d, &summary.s);
      if (s != DPR_OK) return fail(s);
      std::cout << summary.s;
      return kOk;
    }
    if (*sol) {
      DistrictHandle h;
      if (int rc = load(sol_dir, h)) return rc;
      const std::string config = sol_flags.build().dump();
      Owned out;
      const dpr_status s =
          dpr_solve(h.d, config.c_str(), sol_eps ? &*sol_eps : nullptr, sol_rep,
                    sol_out.empty() ? nullptr : sol_out.c_str(), &out.s);
      if (s != DPR_OK) return fail(s);
      if (!sol_out.empty() && !write_file(sol_out + "/solve.json", out.s)) {
        std::fprintf(stderr, "error: cannot write %s/solve.json\n", sol_out.c_str());
        return kRuntime;
      }
      std::cout << out.s;
      return kOk;
    }
    if (*sim) {
      DistrictHandle h;
      if (int rc = load(sim_dir, h)) return rc;
      const std::string config = sim_flags.build().dump();
      Owned out;
      const dpr_status s = dpr_simulate(h.d, config.c_str(), sim_out.c_str(), &out.s);
      if (s != DPR_OK) return fail(s);
      const json r = json::parse(out.s);
      std::cout << r.at("summary").dump(2) << "\n";
      return kOk;
    }
    if (*ses) {
      DistrictHandle h;
      if (int rc = load(ses_dir, h)) return rc;
      Owned out;
      const dpr_status s =
          dpr_ses(h.d, ses_out.empty() ? nullptr : ses_out.c_str(), &out.s);
      if (s != DPR_OK) return fail(s);
      std::cout << out.s;
      return kOk;
    }
    if (*reg) {
      std::vector<const char*> paths;
      for (const auto& p : reg_inputs) paths.push_back(p.c_str());
      Owned out;
      const dpr_status s = dpr_regress(paths.data(), paths.size(),
                                       reg_eps ? &*reg_eps : nullptr, &out.s);
      if (s != DPR_OK) return fail(s);
      if (!reg_out.empty() && !write_file(reg_out, out.s)) {
        std::fprintf(stderr, "error: cannot write %s\n", reg_out.c_str());
        return kRuntime;
      }
      std::cout << out.s;
      return kOk;
    }
    if (*srv) {
      dpr_service* service = nullptr;
      const dpr_status s =
          dpr_service_start(addr.empty() ? nullptr : addr.c_str(),
                            data_dir.empty() ? nullptr : data_dir.c_str(),
                            job_workers, &service);
      if (s != DPR_OK) return fail(s);
      std::fprintf(stderr, "listening on port %d\n", dpr_service_port(service));
      dpr_service_wait(service);
      dpr_service_stop(service);
      return kOk;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kValidation;
}

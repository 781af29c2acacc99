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

#include "dprezone/dprezone.h"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "dprezone/csv.hpp"
#include "dprezone/district.hpp"
#include "dprezone/error.hpp"
#include "dprezone/harness.hpp"
#include "dprezone/service.hpp"
#include "dprezone/ses.hpp"

struct dpr_district {
  dprezone::District district;
};

struct dpr_service {
  std::unique_ptr<dprezone::Service> service;
};

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dprezone;

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
dpr_status guard(Fn fn) {
  g_last_error.clear();
  try {
    fn();
    return DPR_OK;
  } catch (const NotFoundError& e) {
    g_last_error = e.what();
    return DPR_ERR_NOT_FOUND;
  } catch (const ValidationError& e) {
    g_last_error = e.what();
    return DPR_ERR_VALIDATION;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DPR_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DPR_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown failure";
    return DPR_ERR_RUNTIME;
  }
}

dpr_status invalid(const char* what) {
  g_last_error = std::string("null ") + what;
  return DPR_ERR_INVALID_ARG;
}

json parse_json(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

void set_out(char** out, const json& j) {
  if (!out) return;
  *out = dup_string(j.dump(2) + "\n");
  if (!*out) throw std::bad_alloc();
}

std::atomic<bool> g_signalled{false};
extern "C" void on_signal(int) { g_signalled = true; }

}  // namespace

extern "C" {

const char* dpr_version(void) { return "0.1.0"; }

const char* dpr_status_name(dpr_status status) {
  switch (status) {
    case DPR_OK: return "ok";
    case DPR_ERR_VALIDATION: return "validation_error";
    case DPR_ERR_NOT_FOUND: return "not_found";
    case DPR_ERR_RUNTIME: return "runtime_error";
    case DPR_ERR_INVALID_ARG: return "invalid_argument";
  }
  return "unknown";
}

const char* dpr_last_error(void) { return g_last_error.c_str(); }

void dpr_string_free(char* s) { std::free(s); }

dpr_status dpr_district_load_dir(const char* dir, dpr_district** out) {
  if (!dir) return invalid("dir");
  if (!out) return invalid("out");
  *out = nullptr;
  return guard([&] {
    const fs::path root(dir);
    if (!fs::is_directory(root)) {
      throw NotFoundError(std::string("no such district directory: ") + dir);
    }
    DistrictPaths paths;
    paths.blocks = (root / "blocks.csv").string();
    paths.adjacency = (root / "adjacency.csv").string();
    paths.schools = (root / "schools.csv").string();
    paths.assignment = (root / "assignment.csv").string();
    if (fs::exists(root / "travel.csv")) paths.travel = (root / "travel.csv").string();
    if (fs::exists(root / "ses.csv")) paths.ses = (root / "ses.csv").string();
    *out = new dpr_district{load_district(paths)};
  });
}

dpr_status dpr_district_generate(const char* params_json, dpr_district** out) {
  if (!out) return invalid("out");
  *out = nullptr;
  return guard([&] {
    const auto params =
        synthetic_params_from_json(parse_json(params_json, "params"));
    *out = new dpr_district{generate_synthetic(params)};
  });
}

dpr_status dpr_district_write(const dpr_district* district, const char* dir) {
  if (!district) return invalid("district");
  if (!dir) return invalid("dir");
  return guard([&] { write_district(district->district, dir); });
}

dpr_status dpr_district_summary(const dpr_district* district, char** out_json) {
  if (!district) return invalid("district");
  if (!out_json) return invalid("out_json");
  return guard([&] { set_out(out_json, district_summary_json(district->district)); });
}

void dpr_district_free(dpr_district* district) { delete district; }

dpr_status dpr_solve(const dpr_district* district, const char* config_json,
                     const double* epsilon, int replicate, const char* out_dir,
                     char** out_json) {
  if (!district) return invalid("district");
  return guard([&] {
    const ExperimentConfig config =
        config_from_json(parse_json(config_json, "config"));
    if (epsilon && !(*epsilon > 0.0)) {
      throw ValidationError("epsilon must be positive");
    }
    if (replicate < 0) throw ValidationError("replicate must be >= 0");
    const District& d = district->district;
    const SingleSolve s =
        run_single_solve(d, config,
                         epsilon ? std::optional<double>(*epsilon) : std::nullopt,
                         replicate);
    if (out_dir) {
      fs::create_directories(out_dir);
      write_assignment_csv(d, s.solve.assignment,
                           (fs::path(out_dir) / "assignment.csv").string());
    }
    json j{{"scenario", epsilon ? "private" : "nonprivate"},
           {"epsilon", epsilon ? json(*epsilon) : json(nullptr)},
           {"replicate", epsilon ? json(replicate) : json(nullptr)},
           {"config", config_to_json(config)},
           {"solver",
            {{"mode", solver_mode_name(s.solve.mode)},
             {"objective_on_solver_counts", s.solve.objective.value()},
             {"iterations", s.solve.iterations},
             {"proven_optimal", s.solve.proven_optimal},
             {"wall_seconds", s.solve.wall_seconds}}},
           {"current", outcome_to_json(s.current_report)},
           {"result", outcome_to_json(s.report)}};
    set_out(out_json, j);
  });
}

dpr_status dpr_simulate(const dpr_district* district, const char* config_json,
                        const char* out_dir, char** out_json) {
  if (!district) return invalid("district");
  return guard([&] {
    const ExperimentConfig config =
        config_from_json(parse_json(config_json, "config"));
    const ExperimentResult r = run_experiment(district->district, config);
    if (out_dir) emit_report(r, district->district, out_dir);
    set_out(out_json, result_to_json(r, district->district));
  });
}

dpr_status dpr_ses(const dpr_district* district, const char* out_dir,
                   char** out_json) {
  if (!district) return invalid("district");
  return guard([&] {
    const District& d = district->district;
    if (d.ses_vars().empty()) {
      throw ValidationError("district has no ses.csv block-group variables");
    }
    const auto scores = compute_ses(d.ses_vars());
    const CountsMatrix counts = build_ses_counts(d, scores);
    std::size_t high = 0;
    for (const auto& s : scores) high += s.label == SesLabel::kHigh;
    if (out_dir) {
      fs::create_directories(out_dir);
      {
        std::ofstream out(fs::path(out_dir) / "ses_scores.csv", std::ios::binary);
        if (!out) throw InternalError("cannot write ses_scores.csv");
        csv::write_row(out, {"block_group_id", "z_dual_parent", "z_bachelors",
                             "z_non_english", "z_owner_occupied",
                             "z_median_family_income", "composite_z", "label"});
        for (const auto& s : scores) {
          std::vector<std::string> row = {s.block_group_id};
          for (double z : s.variable_z) row.push_back(csv::fixed6(z));
          row.push_back(csv::fixed6(s.composite_z));
          row.push_back(s.label == SesLabel::kHigh ? "high" : "low");
          csv::write_row(out, row);
        }
      }
      {
        std::ofstream out(fs::path(out_dir) / "ses_counts.csv", std::ios::binary);
        if (!out) throw InternalError("cannot write ses_counts.csv");
        csv::write_row(out, {"block_id", "n_low_ses", "n_high_ses", "n_total"});
        for (std::size_t b = 0; b < d.num_blocks(); ++b) {
          csv::write_row(out, {d.blocks()[b].id, std::to_string(counts.at(0, b)),
                               std::to_string(counts.at(1, b)),
                               std::to_string(counts.total(b))});
        }
      }
    }
    set_out(out_json, json{{"block_groups", scores.size()},
                           {"high_ses_block_groups", high},
                           {"low_ses_block_groups", scores.size() - high},
                           {"low_ses_students", counts.group_total(0)},
                           {"high_ses_students", counts.group_total(1)}});
  });
}

dpr_status dpr_regress(const char* const* results_paths, size_t count,
                       const double* epsilon, char** out_json) {
  if (!results_paths && count > 0) return invalid("results_paths");
  return guard([&] {
    std::vector<RegressionRow> rows;
    for (size_t i = 0; i < count; ++i) {
      if (!results_paths[i]) throw ValidationError("null results path");
      std::ifstream in(results_paths[i], std::ios::binary);
      if (!in) {
        throw NotFoundError(std::string("cannot open ") + results_paths[i]);
      }
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ValidationError(std::string(results_paths[i]) +
                              ": not valid JSON: " + e.what());
      }
      rows.push_back(regression_row_from_json(
          j, epsilon ? std::optional<double>(*epsilon) : std::nullopt));
    }
    json out = regression_to_json(build_regression_table(rows));
    json districts = json::array();
    for (const auto& r : rows) {
      districts.push_back(json{{"district", r.district}, {"gap", r.gap}});
    }
    out["districts"] = districts;
    set_out(out_json, out);
  });
}

dpr_status dpr_service_start(const char* addr, const char* data_dir,
                             int job_workers, dpr_service** out) {
  if (!out) return invalid("out");
  *out = nullptr;
  return guard([&] {
    ServiceOptions options;
    const char* env_addr = std::getenv("DP_REZONE_ADDR");
    const char* env_data = std::getenv("DP_REZONE_DATA");
    if (addr) {
      parse_bind_address(addr, options);
    } else if (env_addr) {
      parse_bind_address(env_addr, options);
    }
    if (data_dir) {
      options.data_dir = data_dir;
    } else if (env_data) {
      options.data_dir = env_data;
    }
    if (job_workers > 0) options.job_workers = job_workers;
    auto handle = std::make_unique<dpr_service>();
    handle->service = std::make_unique<Service>(options);
    handle->service->start();
    *out = handle.release();
  });
}

int dpr_service_port(const dpr_service* service) {
  return service ? service->service->port() : -1;
}

void dpr_service_wait(dpr_service* service) {
  if (!service) return;
  g_signalled = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_signalled) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
}

void dpr_service_stop(dpr_service* service) {
  if (!service) return;
  service->service->stop();
  delete service;
}

}  // extern "C"

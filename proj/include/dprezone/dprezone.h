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

/* C interface to the dp-rezone engine.
 *
 * Every function returns a dpr_status. On failure the message for the
 * calling thread is available from dpr_last_error() until the next call.
 * Strings returned through char** out-parameters are owned by the caller
 * and must be released with dpr_string_free(). JSON arguments and results
 * are UTF-8.
 */
#ifndef DPREZONE_H_
#define DPREZONE_H_

#include <stddef.h>

#if defined(_WIN32)
#define DPR_API __declspec(dllexport)
#else
#define DPR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dpr_status {
  DPR_OK = 0,
  DPR_ERR_VALIDATION = 1,   /* bad input, infeasible request, size cap */
  DPR_ERR_NOT_FOUND = 2,    /* missing file or unknown id */
  DPR_ERR_RUNTIME = 3,      /* I/O or internal failure */
  DPR_ERR_INVALID_ARG = 4,  /* null handle or pointer */
} dpr_status;

typedef struct dpr_district dpr_district;
typedef struct dpr_service dpr_service;

DPR_API const char* dpr_version(void);
DPR_API const char* dpr_status_name(dpr_status status);
DPR_API const char* dpr_last_error(void);
DPR_API void dpr_string_free(char* s);

/* Loads blocks.csv, adjacency.csv, schools.csv, assignment.csv and the
 * optional travel.csv and ses.csv from `dir`. */
DPR_API dpr_status dpr_district_load_dir(const char* dir, dpr_district** out);

/* params_json: {"rows", "cols", "schools", "segregation_strength",
 * "mean_block_pop", "seed"}; may be NULL for defaults. */
DPR_API dpr_status dpr_district_generate(const char* params_json,
                                         dpr_district** out);

DPR_API dpr_status dpr_district_write(const dpr_district* district,
                                      const char* dir);

DPR_API dpr_status dpr_district_summary(const dpr_district* district,
                                        char** out_json);

DPR_API void dpr_district_free(dpr_district* district);

/* Solves one scenario. With epsilon NULL the solver sees ground truth;
 * otherwise counts are privatized with the stream for (seed, *epsilon,
 * replicate). When out_dir is non-NULL the assignment is written to
 * out_dir/assignment.csv. config_json uses the experiment schema and may
 * be NULL. */
DPR_API dpr_status dpr_solve(const dpr_district* district,
                             const char* config_json, const double* epsilon,
                             int replicate, const char* out_dir,
                             char** out_json);

/* Runs the full experiment and writes the report files into out_dir
 * (NULL skips writing). out_json receives results.json content. */
DPR_API dpr_status dpr_simulate(const dpr_district* district,
                                const char* config_json, const char* out_dir,
                                char** out_json);

/* Scores block groups, writes ses_scores.csv and ses_counts.csv into
 * out_dir (NULL skips writing). */
DPR_API dpr_status dpr_ses(const dpr_district* district, const char* out_dir,
                           char** out_json);

/* Regresses the privacy gap on district features, one results.json per
 * district. epsilon NULL takes the largest gap over each run's budgets. */
DPR_API dpr_status dpr_regress(const char* const* results_paths, size_t count,
                               const double* epsilon, char** out_json);

/* Starts the HTTP service. addr is "host:port" (port 0 picks a free one);
 * NULL fields fall back to DP_REZONE_ADDR / DP_REZONE_DATA and then to
 * 127.0.0.1:8080 and ./dp-rezone-data. */
DPR_API dpr_status dpr_service_start(const char* addr, const char* data_dir,
                                     int job_workers, dpr_service** out);
DPR_API int dpr_service_port(const dpr_service* service);
/* Blocks until the process receives SIGINT or SIGTERM. */
DPR_API void dpr_service_wait(dpr_service* service);
/* Stops serving and frees the handle. */
DPR_API void dpr_service_stop(dpr_service* service);

#ifdef __cplusplus
}
#endif

#endif /* DPREZONE_H_ */

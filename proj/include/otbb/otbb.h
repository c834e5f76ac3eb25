/*************************************************************************************************
 * C interface of the otbb library
 *
 * Copyright 2026 The otbb Authors
 * Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
 * except in compliance with the License.  You may obtain a copy of the License at
 *     https://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software distributed under the
 * License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
 * either express or implied.  See the License for the specific language governing permissions
 * and limitations under the License.
 *************************************************************************************************/

#ifndef OTBB_H
#define OTBB_H

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__)
#define OTBB_API __attribute__((visibility("default")))
#else
#define OTBB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible call. */
typedef enum {
  OTBB_OK = 0,
  OTBB_ERR_INVALID_ARGUMENT = 1,
  OTBB_ERR_IO = 2,
  OTBB_ERR_MASS_MISMATCH = 3,
  OTBB_ERR_SINGULAR = 4,
  OTBB_ERR_NOT_CONVERGED = 5,
  OTBB_ERR_VERIFICATION_FAILED = 6,
  OTBB_ERR_TYPE_MISMATCH = 7,
  OTBB_ERR_OUT_OF_DOMAIN = 8,
  OTBB_ERR_INTERNAL = 99
} otbb_status;

/* Outcome of a completed run. */
typedef enum {
  OTBB_RUN_OK = 0,
  OTBB_RUN_NOT_CONVERGED = 3,
  OTBB_RUN_VERIFICATION_FAILED = 4
} otbb_run_status;

typedef struct otbb_experiment otbb_experiment;
typedef struct otbb_result otbb_result;
typedef struct otbb_model otbb_model;

OTBB_API const char* otbb_version(void);

/* Message of the last failed call on this thread; empty after a success. */
OTBB_API const char* otbb_last_error(void);
OTBB_API otbb_status otbb_last_status(void);

/* Strings returned through char** outputs are owned by the caller. */
OTBB_API void otbb_free_string(char* s);

/* Worker cap for parallel loops; n < 1 resets to OTBB_JOBS or 1. */
OTBB_API void otbb_set_jobs(int n);

/* Experiments. base_dir resolves relative file references and may be NULL. */
OTBB_API otbb_status otbb_experiment_from_json(const char* json, const char* base_dir, otbb_experiment** out);
OTBB_API otbb_status otbb_experiment_from_file(const char* path, otbb_experiment** out);
OTBB_API void otbb_experiment_free(otbb_experiment* e);
OTBB_API otbb_status otbb_experiment_to_json(const otbb_experiment* e, char** out);
OTBB_API otbb_status otbb_experiment_run(const otbb_experiment* e, otbb_result** out);

OTBB_API otbb_run_status otbb_result_status(const otbb_result* r);
/* Borrowed views, valid until otbb_result_free. */
OTBB_API const char* otbb_result_csv(const otbb_result* r);
OTBB_API const char* otbb_result_json(const otbb_result* r);
OTBB_API const char* otbb_result_path(const otbb_result* r);
OTBB_API size_t otbb_result_line_count(const otbb_result* r);
OTBB_API const char* otbb_result_line(const otbb_result* r, size_t i);
/* Writes the outputs named in the experiment's "output" block. */
OTBB_API otbb_status otbb_result_write(const otbb_experiment* e, const otbb_result* r);
OTBB_API void otbb_result_free(otbb_result* r);

/* Spatial models built from the "model" block of an experiment spec. */
OTBB_API otbb_status otbb_model_create(const char* model_json, otbb_model** out);
OTBB_API void otbb_model_free(otbb_model* m);
OTBB_API int otbb_model_n_density(const otbb_model* m);
OTBB_API int otbb_model_n_momentum(const otbb_model* m);
OTBB_API double otbb_model_sigma(const otbb_model* m);
/* Samples a measure (mini-language or JSON) into out[0..n_density). */
OTBB_API otbb_status otbb_model_sample(const otbb_model* m, const char* measure, double* out, size_t n);
/* Solves the discrete problem between two sampled densities. options_json may be NULL;
   path_json may be NULL when the path is not wanted. */
OTBB_API otbb_status otbb_model_solve(const otbb_model* m, const double* P0, const double* P1, size_t n, int N,
                                      const char* options_json, double* objective, int* converged,
                                      char** path_json);

/* Proximal map of w |m|^2 / (2 s) with step gamma; m has dim entries (1..3). */
OTBB_API otbb_status otbb_prox_kinetic(double s_in, const double* m_in, int dim, double gamma, double w,
                                       double* s_out, double* m_out);

#ifdef __cplusplus
}
#endif

#endif

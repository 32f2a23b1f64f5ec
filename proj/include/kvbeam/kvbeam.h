// Copyright 2026 The kvbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the kvbeam library. All handles are opaque. Every function
 * that can fail returns a kvb_status; on failure, kvb_last_error_message()
 * describes the error raised on the calling thread. */
#ifndef KVBEAM_KVBEAM_H_
#define KVBEAM_KVBEAM_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define KVB_API __attribute__((visibility("default")))
#else
#define KVB_API
#endif

typedef enum kvb_status {
  KVB_OK = 0,
  KVB_ERR_CONFIGURATION = 1,
  KVB_ERR_HYPOTHESIS = 2,
  KVB_ERR_DOMAIN = 3,
  KVB_ERR_ACCURACY = 4,
  KVB_ERR_DIVERGENCE = 5,
  KVB_ERR_FIT = 6,
  KVB_ERR_SOLVER = 7,
  KVB_ERR_CAPABILITY = 8,
  KVB_ERR_INSTABILITY = 9,
  KVB_ERR_INPUT = 10,
  KVB_ERR_ON_SPECTRUM = 11,
  KVB_ERR_IO = 12,
  KVB_ERR_INVALID_ARGUMENT = 100,
  KVB_ERR_INTERNAL = 101
} kvb_status;

typedef enum kvb_side {
  KVB_SIDE_NONE = 0,
  KVB_SIDE_SHEAR = 1,
  KVB_SIDE_BENDING = 2,
  KVB_SIDE_BOTH = 3
} kvb_side;

typedef enum kvb_matrix {
  KVB_MATRIX_GRAM = 0,
  KVB_MATRIX_LHS = 1,
  KVB_MATRIX_RHS = 2
} kvb_matrix;

typedef struct kvb_system kvb_system;
typedef struct kvb_trajectory kvb_trajectory;

/* Power-law damping scale * x^exponent on (0,1] for the chosen side(s). */
typedef struct kvb_system_spec {
  double rho1, rho2, kappa1, kappa2;
  kvb_side side;
  double damping_scale;
  double damping_exponent;
  int mesh_elements;
  int enforce_hypotheses; /* nonzero: reject alpha >= 1 */
} kvb_system_spec;

KVB_API const char* kvb_version(void);
KVB_API const char* kvb_last_error_message(void);
KVB_API const char* kvb_status_name(kvb_status status);

/* Fills spec with the default parameters (unit coefficients, bending side,
 * exponent 1/2, 128 elements). */
KVB_API void kvb_system_spec_default(kvb_system_spec* spec);

KVB_API kvb_status kvb_system_create(const kvb_system_spec* spec,
                                     kvb_system** out);
KVB_API void kvb_system_destroy(kvb_system* system);

/* Length of a stacked state (w, phi, v, psi) at the interior nodes. */
KVB_API size_t kvb_system_dimension(const kvb_system* system);

/* out = A_h u; both arrays have kvb_system_dimension() entries. */
KVB_API kvb_status kvb_apply_generator(const kvb_system* system,
                                       const double* u, double* out);
KVB_API kvb_status kvb_h_norm(const kvb_system* system, const double* u,
                              double* out);
/* Interpolates a catalog initial state into u. */
KVB_API kvb_status kvb_initial_data(const kvb_system* system, const char* name,
                                    unsigned long long seed, double* u);

/* Writes "row col value" lines to path. */
KVB_API kvb_status kvb_export_triplets(const kvb_system* system,
                                       kvb_matrix which, const char* path);

/* Copies up to capacity eigenvalues (sorted by imaginary part) into re/im and
 * stores the total count; pass capacity 0 to query the count. */
KVB_API kvb_status kvb_spectrum(const kvb_system* system, double* re,
                                double* im, size_t capacity, size_t* count,
                                double* spectral_abscissa);

KVB_API kvb_status kvb_resolvent_norm(const kvb_system* system, double omega,
                                      double* out);

KVB_API kvb_status kvb_simulate(const kvb_system* system, const double* u0,
                                double t_end, double dt, int sample_every,
                                kvb_trajectory** out);
KVB_API void kvb_trajectory_destroy(kvb_trajectory* trajectory);
KVB_API size_t kvb_trajectory_size(const kvb_trajectory* trajectory);
/* Pointers stay valid until the trajectory is destroyed. */
KVB_API const double* kvb_trajectory_times(const kvb_trajectory* trajectory);
KVB_API const double* kvb_trajectory_h_norms(const kvb_trajectory* trajectory);
KVB_API const double* kvb_trajectory_energies(const kvb_trajectory* trajectory);
KVB_API double kvb_trajectory_graph_norm(const kvb_trajectory* trajectory);

/* Scenario configuration files. Warnings and reports are returned as
 * heap strings released with kvb_string_free. */
KVB_API kvb_status kvb_config_validate(const char* path, size_t* scenarios,
                                       char** warnings);
KVB_API kvb_status kvb_run_config(const char* path, const char* out_dir,
                                  int jobs, char** report);
KVB_API kvb_status kvb_report(const char* run_dir, char** report);
KVB_API kvb_status kvb_plots(const char* run_dir, size_t* scripts_written);
KVB_API void kvb_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif  /* KVBEAM_KVBEAM_H_ */

/* C interface to the plprep library. All functions return a plp_status;
   on failure plp_last_error() describes the problem (thread-local). Strings
   returned through char** must be released with plp_string_free. */
#ifndef PLPREP_H
#define PLPREP_H

#include <stddef.h>
#include <stdint.h>

#if defined(PLPREP_BUILDING_LIBRARY)
#define PLP_API __attribute__((visibility("default")))
#else
#define PLP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plp_status {
  PLP_OK = 0,
  PLP_ERR_INVALID_ARGUMENT = 1,
  PLP_ERR_DOMAIN = 2,
  PLP_ERR_NUMERIC = 3,
  PLP_ERR_HULL = 4,
  PLP_ERR_PARSE = 5,
  PLP_ERR_IO = 6,
  PLP_ERR_INTERNAL = 7
} plp_status;

typedef enum plp_hull_policy { PLP_HULL_REJECT_POINT = 0, PLP_HULL_ERROR = 1 } plp_hull_policy;

typedef struct plp_model plp_model;
typedef struct plp_dataset plp_dataset;
typedef struct plp_spec plp_spec;

typedef struct plp_test_result {
  double alpha;
  double statistic;
  double delta_threshold;
  double critical_value;
  double pvalue_outer;
  int reject;
  int outer_hull_failure;
  size_t inner_loops_started;
  size_t inner_loops_early_stopped;
  size_t threshold_replacements;
  size_t hull_failures;
  size_t inner_replicates;
} plp_test_result;

PLP_API const char* plp_version(void);
PLP_API const char* plp_last_error(void);
PLP_API const char* plp_status_string(plp_status status);
PLP_API void plp_string_free(char* s);

/* Models */
PLP_API plp_status plp_model_create_mvn(size_t q, plp_model** out);
PLP_API plp_status plp_model_create_probit(size_t q, size_t n_beta, plp_model** out);
PLP_API void plp_model_free(plp_model* model);
PLP_API size_t plp_model_param_dim(const plp_model* model);
/* Writes the model name (NUL-terminated, truncated to cap) into buf. */
PLP_API plp_status plp_model_name(const plp_model* model, char* buf, size_t cap);

/* Datasets */
PLP_API plp_status plp_dataset_load_csv(const char* path, const char* design_path, plp_dataset** out);
PLP_API plp_status plp_dataset_save_csv(const plp_dataset* data, const char* path, const char* design_path);
/* Simulates n units at theta with stream (seed, stream_id). */
PLP_API plp_status plp_dataset_simulate(const plp_model* model, const double* theta, size_t p, size_t n,
                                        uint64_t seed, uint64_t stream_id, plp_dataset** out);
PLP_API void plp_dataset_free(plp_dataset* data);
PLP_API size_t plp_dataset_n(const plp_dataset* data);
PLP_API size_t plp_dataset_q(const plp_dataset* data);

/* Estimation and statistics */
PLP_API plp_status plp_mple(const plp_model* model, const plp_dataset* data, const double* start, size_t p,
                            double* theta_hat, int* converged);
PLP_API plp_status plp_pw_us(const plp_model* model, const plp_dataset* data, const double* theta, size_t p,
                             double* out);

/* Prepivoted test of theta0 at each of n_alpha levels; results[k] for
   alphas[k]. The calibration stream is (seed, 0). */
PLP_API plp_status plp_prepivot_test(const plp_model* model, const plp_dataset* data, const double* theta0, size_t p,
                                     size_t B, size_t M, const double* alphas, size_t n_alpha, uint64_t seed,
                                     plp_hull_policy policy, plp_test_result* results);
/* Same, as a JSON array of result objects. */
PLP_API plp_status plp_prepivot_test_json(const plp_model* model, const plp_dataset* data, const double* theta0,
                                          size_t p, size_t B, size_t M, const double* alphas, size_t n_alpha,
                                          uint64_t seed, plp_hull_policy policy, char** json);

/* Experiment specs (JSON files) */
PLP_API plp_status plp_spec_load(const char* path, plp_spec** out);
PLP_API plp_status plp_spec_parse(const char* json_text, plp_spec** out);
PLP_API void plp_spec_free(plp_spec* spec);
PLP_API plp_status plp_spec_set_seed(plp_spec* spec, uint64_t seed);
PLP_API plp_status plp_spec_set_threads(plp_spec* spec, size_t threads);
PLP_API plp_status plp_spec_set_out_dir(plp_spec* spec, const char* dir);
PLP_API plp_status plp_spec_set_hull_policy(plp_spec* spec, plp_hull_policy policy);
PLP_API plp_status plp_spec_set_trials(plp_spec* spec, size_t trials);
PLP_API plp_status plp_spec_to_json(const plp_spec* spec, char** json);
/* Output directory of the spec; valid until the spec is modified or freed. */
PLP_API const char* plp_spec_out_dir(const plp_spec* spec);
/* Model described by the spec (full parameterization). */
PLP_API plp_status plp_spec_model(const plp_spec* spec, plp_model** out);
/* True parameter of the spec; writes up to cap values, *p receives the dimension. */
PLP_API plp_status plp_spec_theta(const plp_spec* spec, double* theta, size_t cap, size_t* p);

/* Runs the spec's study (rejection or coverage) and writes rejection.csv or
   coverage_grid.csv, contour_<stat>.svg and diagnostics.json into the spec's
   output directory. A JSON summary is returned when summary != NULL. */
PLP_API plp_status plp_run_study(const plp_spec* spec, char** summary);

/* Prepivot confidence-set scan of the spec's grid on one dataset; writes
   coverage_grid.csv (membership 0/1), contours and diagnostics.json. */
PLP_API plp_status plp_run_confset(const plp_spec* spec, const plp_dataset* data, char** summary);

/* Computes (or reads from the spec's cache directory) the mc-true
   information at the spec's truth and, for coverage specs, at every grid
   point; returns a JSON listing. */
PLP_API plp_status plp_info_cache(const plp_spec* spec, int include_grid, char** listing);
/* Lists cache files in a directory as JSON. */
PLP_API plp_status plp_info_cache_list(const char* dir, char** listing);

#ifdef __cplusplus
}
#endif

#endif

/* C interface to the dynamical influence model library.
 *
 * Every function that can fail returns an infl_status; on failure the message
 * is available from infl_last_error() on the same thread until the next call.
 * Objects are opaque handles released with the matching *_free function.
 * Chains, states, symbols, patterns and time steps are 1-based here. */
#ifndef INFLUENCE_H
#define INFLUENCE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define INFL_API __attribute__((visibility("default")))
#else
#define INFL_API
#endif

typedef enum infl_status {
  INFL_OK = 0,
  INFL_INVALID_ARGUMENT = 1,
  INFL_DIMENSION_MISMATCH = 2,
  INFL_STOCHASTICITY_VIOLATION = 3,
  INFL_DEGENERATE_EVIDENCE = 4,
  INFL_NUMERICAL_FAILURE = 5,
  INFL_PARSE_ERROR = 6,
  INFL_CAPACITY_EXCEEDED = 7,
  INFL_IO_ERROR = 8,
  INFL_INTERNAL_ERROR = 9
} infl_status;

typedef enum infl_emission { INFL_MULTINOMIAL = 0, INFL_GAUSSIAN = 1 } infl_emission;

/* AUTO picks JSON for a .json extension and CSV otherwise. */
typedef enum infl_format { INFL_FORMAT_AUTO = 0, INFL_FORMAT_CSV = 1, INFL_FORMAT_JSON = 2 } infl_format;

typedef struct infl_observations infl_observations;
typedef struct infl_model infl_model;
typedef struct infl_fit infl_fit;

typedef struct infl_spec {
  size_t num_chains;
  size_t num_states;
  size_t num_patterns;
  double prior_exponent;
  infl_emission emission;
  size_t num_symbols; /* 0: taken from the data */
  const double* gaussian_means;
  size_t num_means;
} infl_spec;

typedef struct infl_fit_options {
  size_t max_iterations;
  double tolerance;
  uint64_t seed;
  size_t restarts;
  const infl_model* initial;   /* optional */
  const infl_model* reference; /* optional; enables the per-iteration K-L trace */
} infl_fit_options;

typedef struct infl_toy_options {
  size_t patterns;
  double prior_exponent;
  uint64_t seed;
  size_t max_iterations;
  double tolerance;
  size_t restarts;
} infl_toy_options;

typedef struct infl_toy_summary {
  double recovery_error;
  int recovered;
  int switch_detected;
  size_t crossing;
  double max_unused;
  int converged;
  size_t iterations;
  double final_kl;
} infl_toy_summary;

INFL_API const char* infl_version(void);
INFL_API const char* infl_last_error(void);
INFL_API const char* infl_status_name(infl_status status);

INFL_API void infl_spec_init(infl_spec* spec);
INFL_API void infl_fit_options_init(infl_fit_options* options);
INFL_API void infl_toy_options_init(infl_toy_options* options);

/* Observations. Arrays are chain-major: element [c * length + t]. */
INFL_API infl_status infl_observations_load(const char* path, infl_format format,
                                            infl_emission emission, infl_observations** out);
INFL_API infl_status infl_observations_save(const infl_observations* obs, const char* path,
                                            infl_format format);
INFL_API infl_status infl_observations_from_symbols(size_t chains, size_t length,
                                                    const int* symbols, infl_observations** out);
INFL_API infl_status infl_observations_from_values(size_t chains, size_t length,
                                                   const double* values, infl_observations** out);
INFL_API size_t infl_observations_chains(const infl_observations* obs);
INFL_API size_t infl_observations_length(const infl_observations* obs);
INFL_API int infl_observations_is_discrete(const infl_observations* obs);
INFL_API infl_status infl_observations_symbols(const infl_observations* obs, int* out);
INFL_API void infl_observations_free(infl_observations* obs);

/* Models (spec plus parameters). */
INFL_API infl_status infl_model_load(const char* path, infl_model** out);
INFL_API infl_status infl_model_save(const infl_model* model, const char* path);
/* Dirichlet(1) rows; multinomial specs need num_symbols > 0. */
INFL_API infl_status infl_model_random(const infl_spec* spec, uint64_t seed, infl_model** out);
/* gaussian_means in out stays valid while the model lives. */
INFL_API infl_status infl_model_spec(const infl_model* model, infl_spec* out);
/* Row-major C x C influence matrix of a 1-based pattern. */
INFL_API infl_status infl_model_influence(const infl_model* model, size_t pattern, double* out);
INFL_API infl_status infl_kl_to_reference(const infl_model* learned, const infl_model* reference,
                                          double* out);
INFL_API void infl_model_free(infl_model* model);

/* Draws a trajectory. schedule (1-based patterns, may be NULL) forces r_t.
 * patterns_out (length) and states_out (chain-major) may be NULL. */
INFL_API infl_status infl_sample(const infl_model* model, size_t length, uint64_t seed,
                                 const int* schedule, infl_observations** out, int* patterns_out,
                                 int* states_out);

/* Fitting. A run that stops at max_iterations still returns INFL_OK; check
 * infl_fit_converged. */
INFL_API infl_status infl_fit_run(const infl_spec* spec, const infl_observations* obs,
                                  const infl_fit_options* options, infl_fit** out);
INFL_API int infl_fit_converged(const infl_fit* fit);
INFL_API size_t infl_fit_iterations(const infl_fit* fit);
INFL_API double infl_fit_log_likelihood(const infl_fit* fit);
INFL_API infl_status infl_fit_model(const infl_fit* fit, infl_model** out);
/* Row-major length x patterns. */
INFL_API infl_status infl_fit_lambda(const infl_fit* fit, double* out);
INFL_API infl_status infl_fit_save_params(const infl_fit* fit, const char* path);
INFL_API infl_status infl_fit_save_report(const infl_fit* fit, const char* path);
INFL_API infl_status infl_fit_save_lambda(const infl_fit* fit, const char* path);
INFL_API void infl_fit_free(infl_fit* fit);

/* Tasks. */
INFL_API infl_status infl_binarize(const infl_observations* raw, double threshold,
                                   infl_observations** out);
/* current_speaker 0 means the lone speaker of the last step. probabilities
 * (num_chains entries, may be NULL) receives each chain's speaking chance. */
INFL_API infl_status infl_predict_next_speaker(const infl_spec* spec,
                                               const infl_observations* history,
                                               size_t current_speaker,
                                               const infl_fit_options* options, size_t* speaker,
                                               double* probabilities);
INFL_API infl_status infl_detect_change(const infl_spec* spec, const infl_observations* obs,
                                        const infl_fit_options* options, double probe_fraction,
                                        double* score, size_t* probe_time);
/* 1 or 2: the sample labelled Changed. Ties label the first Unchanged. */
INFL_API int infl_compare_change_scores(double first, double second);
/* Runs the synthetic turn-taking benchmark and writes the accuracy table. */
INFL_API infl_status infl_turn_taking_eval(size_t num_seeds, uint64_t first_seed,
                                           const infl_fit_options* options,
                                           double prior_exponent, const char* csv_path);

/* Two-chain switching experiment. output_dir (may be NULL) receives
 * truth.json, observations.csv, params.json, lambda.csv and report.json. */
INFL_API infl_status infl_eval_toy(const infl_toy_options* options, const char* output_dir,
                                   infl_toy_summary* out);

#ifdef __cplusplus
}
#endif

#endif

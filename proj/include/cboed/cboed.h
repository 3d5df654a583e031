/* C interface to the cboed library. All functions are thread-safe on
 * distinct handles; the last error message is kept per thread. */
#ifndef CBOED_H
#define CBOED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CBOED_API __declspec(dllexport)
#else
#define CBOED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cboed_status {
  CBOED_OK = 0,
  CBOED_INVALID_ARGUMENT = 1,
  CBOED_INDEX_OUT_OF_RANGE,
  CBOED_DUPLICATE_INDEX,
  CBOED_OUT_OF_DOMAIN,
  CBOED_DIMENSION_MISMATCH,
  CBOED_DEGENERATE_DIMENSION,
  CBOED_DIMENSION_CAP_EXCEEDED,
  CBOED_INFEASIBLE_OBSERVATION,
  CBOED_ALL_CENTERS_INFEASIBLE,
  CBOED_TOO_FEW_ACCEPTED,
  CBOED_EMPTY_DESIGN_SPACE,
  CBOED_UNSUPPORTED_MODEL,
  CBOED_MODEL_EVALUATION_FAILED,
  CBOED_SOLVER_DID_NOT_CONVERGE,
  CBOED_PARSE_ERROR,
  CBOED_VALIDATION_ERROR,
  CBOED_IO_ERROR,
  CBOED_INTERNAL_ERROR = 100
} cboed_status;

typedef struct cboed_model cboed_model;
typedef struct cboed_samples cboed_samples;

CBOED_API const char* cboed_version(void);
CBOED_API const char* cboed_status_name(cboed_status status);
/* Message for the most recent failure on this thread, or "". */
CBOED_API const char* cboed_last_error(void);

CBOED_API size_t cboed_model_count(void);
/* NULL when index is out of range. */
CBOED_API const char* cboed_model_name(size_t index);

/* params_json may be NULL. convdiff_amplitude reads its sensors from
 * params.sensors = [[x, y], ...]. */
CBOED_API cboed_status cboed_model_create(const char* name, const char* params_json, cboed_model** out);
CBOED_API void cboed_model_destroy(cboed_model* model);
CBOED_API cboed_status cboed_model_dims(const cboed_model* model, size_t* n_params, size_t* n_qoi);
CBOED_API cboed_status cboed_model_evaluate(const cboed_model* model, const double* lambda, size_t n_params,
                                            double* qoi, size_t n_qoi);

/* Draws n uniform prior samples with the given seed and evaluates every QoI.
 * threads = 0 uses all cores; results do not depend on it. */
CBOED_API cboed_status cboed_samples_create(const cboed_model* model, size_t n, uint64_t seed,
                                            unsigned threads, cboed_samples** out);
CBOED_API void cboed_samples_destroy(cboed_samples* samples);
CBOED_API size_t cboed_samples_size(const cboed_samples* samples);
/* Copies row i: n_params parameters then n_qoi QoI values. */
CBOED_API cboed_status cboed_samples_row(const cboed_samples* samples, size_t i, double* params, size_t n_params,
                                         double* qoi, size_t n_qoi);

/* Expected information gain (nats) of the design made of the given QoI
 * columns, with fixed noise sigma (one value or one per QoI) and the first
 * m_centers samples as observation centers. */
CBOED_API cboed_status cboed_eig(const cboed_samples* samples, const size_t* qoi, size_t n_qoi,
                                 const double* sigma, size_t n_sigma, size_t m_centers, unsigned threads,
                                 double* eig, size_t* n_infeasible);

/* Consistent-Bayes update for one Gaussian observation on the given QoI
 * columns. Any output pointer may be NULL. */
CBOED_API cboed_status cboed_infer(const cboed_samples* samples, const size_t* qoi, size_t n_qoi,
                                   const double* center, const double* sigma, double* information_gain,
                                   double* norm_constant, double* acceptance_rate);

/* Runs a study config. output_dir overrides the config when not NULL.
 * Returns 0 on success, 1 for an invalid config, 2 for a failed computation. */
CBOED_API int cboed_run_study(const char* config_path, const char* output_dir, unsigned threads, int quiet);

#ifdef __cplusplus
}
#endif

#endif

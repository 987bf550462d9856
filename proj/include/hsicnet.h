/* C interface to the hsicnet pipeline: experiment orchestration behind an
 * opaque handle, plus direct entry points for the kernel statistic. All
 * functions return a status code; hsn_last_error() holds the message for the
 * most recent failure on the calling thread. */
#ifndef HSICNET_H
#define HSICNET_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hsn_status {
  HSN_OK = 0,
  HSN_ERROR_INVALID_ARGUMENT = 1,
  HSN_ERROR_CONFIG = 2,
  HSN_ERROR_DATA = 3,
  HSN_ERROR_NUMERIC = 4,
  HSN_ERROR_INTERNAL = 5
} hsn_status;

/* An experiment: a validated configuration ready to run pipeline stages. */
typedef struct hsn_experiment hsn_experiment;

/* Loads a JSON config file and applies dotted-path overrides ("a.b=3").
 * overrides may be NULL when n_overrides is 0. On success *out owns the
 * handle; release it with hsn_experiment_close. */
hsn_status hsn_experiment_open(const char* config_path,
                               const char* const* overrides,
                               size_t n_overrides, hsn_experiment** out);

/* Same, but from an in-memory JSON document. */
hsn_status hsn_experiment_open_json(const char* config_json,
                                    const char* const* overrides,
                                    size_t n_overrides, hsn_experiment** out);

void hsn_experiment_close(hsn_experiment* experiment);

/* Runs one stage ("synth", "features", "train", "sweep", "eval", "cam",
 * "noise", "report"); artifacts land under out_dir. */
hsn_status hsn_experiment_run(hsn_experiment* experiment,
                              const char* subcommand, const char* out_dir);

/* Biased HSIC estimate between row-major matrices f (n x df) and g (n x dg)
 * with Gaussian kernel bandwidths sigma_f / sigma_g. */
hsn_status hsn_hsic_statistic(const double* f, size_t n, size_t df,
                              const double* g, size_t dg, double sigma_f,
                              double sigma_g, double* out);

/* Median pairwise Euclidean distance of a row-major n x d matrix, floored at
 * min_bandwidth. */
hsn_status hsn_median_heuristic(const double* x, size_t n, size_t d,
                                double min_bandwidth, double* out);

/* Message for the most recent failing call on this thread ("" if none). */
const char* hsn_last_error(void);

const char* hsn_version(void);

#ifdef __cplusplus
}
#endif

#endif /* HSICNET_H */

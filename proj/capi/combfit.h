/*
 * combfit C API: mixed atom-at-zero claim marginals coupled by a Gaussian
 * copula, fitted in two stages with parametric-bootstrap confidence
 * intervals. Handles are opaque; every function returns a status code and
 * the last error message is queryable per thread. Returned strings are
 * malloc'd by the library and must be released with combfit_string_free.
 */
#ifndef COMBFIT_H
#define COMBFIT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct combfit_series combfit_series;
typedef struct combfit_model combfit_model;

typedef enum combfit_status {
  COMBFIT_OK = 0,
  COMBFIT_ERR_PARSE = 1,          /* malformed input file or document */
  COMBFIT_ERR_DATA = 2,           /* domain/shape violations in the data */
  COMBFIT_ERR_NUMERIC = 3,        /* factorization, underflow, starved sampler */
  COMBFIT_ERR_NO_CONVERGENCE = 4, /* optimizer or bootstrap did not stabilize */
  COMBFIT_ERR_INVALID = 5         /* null handle or invalid argument */
} combfit_status;

const char* combfit_version(void);
/* Message for the most recent failure on the calling thread. */
const char* combfit_last_error(void);
void combfit_string_free(char* s);

typedef struct combfit_fit_options {
  double tol;       /* simplex diameter in angle space */
  int max_iter;
  int restarts;
  uint64_t seed;
  double mvn_tol;
} combfit_fit_options;
void combfit_fit_options_init(combfit_fit_options* opts);

typedef struct combfit_bootstrap_options {
  int replicas;
  double alpha;
  int bonferroni; /* nonzero: quantile levels divided by the parameter count */
  uint64_t seed;
  int threads;
  combfit_fit_options fit;
} combfit_bootstrap_options;
void combfit_bootstrap_options_init(combfit_bootstrap_options* opts);

/* ---- claim series ---- */

/* unit_is_dkk nonzero: raw currency, divided by 1e6 at ingestion. */
combfit_status combfit_series_load(const char* path, int unit_is_dkk, combfit_series** out);
combfit_status combfit_series_from_values(long n_rows, int n_cols, const double* row_major,
                                          const char* const* labels_or_null,
                                          combfit_series** out);
void combfit_series_free(combfit_series* series);
combfit_status combfit_series_shape(const combfit_series* series, long* n_rows, int* n_cols);
/* comma-separated label list, e.g. "building,contents" */
combfit_status combfit_series_select(const combfit_series* series, const char* labels,
                                     combfit_series** out);
combfit_status combfit_series_to_csv(const combfit_series* series, const char* path);
combfit_status combfit_series_stats_json(const combfit_series* series, char** json_out);

/* ---- model ---- */

combfit_status combfit_model_from_json(const char* json_text, double mvn_tol, uint64_t seed,
                                       combfit_model** out);
combfit_status combfit_model_to_json(const combfit_model* model, char** json_out);
void combfit_model_free(combfit_model* model);
combfit_status combfit_model_dim(const combfit_model* model, int* dim);
combfit_status combfit_model_correlation(const combfit_model* model, int i, int j, double* rho);
combfit_status combfit_model_marginal(const combfit_model* model, int i, double* p, double* mu,
                                      double* sigma);
combfit_status combfit_model_loglik(const combfit_model* model, const combfit_series* series,
                                    double* loglik);

/* ---- operations ---- */

combfit_status combfit_fit(const combfit_series* series, const combfit_fit_options* opts,
                           combfit_model** model_out, char** report_json_out);
combfit_status combfit_simulate(const combfit_model* model, long n_rows, uint64_t seed,
                                combfit_series** out);
combfit_status combfit_bootstrap_json(const combfit_model* model, long n_rows,
                                      const combfit_bootstrap_options* opts, char** json_out);
combfit_status combfit_spearman_json(const combfit_series* series, char** json_out);
combfit_status combfit_zero_mixed_json(const combfit_series* series, uint64_t seed, double alpha,
                                       char** json_out);
combfit_status combfit_bench_csv(const int* dims, int n_dims, long n_rows, int repetitions,
                                 uint64_t seed, char** csv_out, char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* COMBFIT_H */

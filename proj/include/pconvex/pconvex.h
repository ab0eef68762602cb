#ifndef PCONVEX_PCONVEX_H
#define PCONVEX_PCONVEX_H

/*
 * C interface to the p-convex operator library.
 *
 * Every function returns a pcv_status; on failure a thread-local message is
 * available from pcv_last_error() until the next call on the same thread.
 * Strings handed out by a run stay valid until the run is destroyed or
 * executed again.
 */

#include <stddef.h>

#if defined(PCV_BUILDING_LIBRARY)
#define PCV_API __attribute__((visibility("default")))
#else
#define PCV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pcv_status {
    PCV_OK = 0,
    PCV_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad size, out-of-range n or p */
    PCV_ERR_CONFIG = 2,           /* config JSON malformed or violates the schema */
    PCV_ERR_DOMAIN = 3,           /* argument outside the cone or data hypotheses */
    PCV_ERR_NUMERIC = 4,          /* eigensolver or linear solver breakdown */
    PCV_ERR_IO = 5,               /* artifact files could not be written */
    PCV_ERR_STATE = 6,            /* call out of order, e.g. report before execute */
    PCV_ERR_INTERNAL = 7
} pcv_status;

typedef struct pcv_run pcv_run;

PCV_API const char* pcv_version(void);
PCV_API const char* pcv_last_error(void);
PCV_API const char* pcv_status_name(pcv_status status);

/* F and its C(n,p)-th root at eigenvalues lambda[0..n-1].  On the cone
 * boundary *tilde_F = 0 and *log_F = -inf; outside the closed cone
 * *defined = 0 and *tilde_F is NaN.  log_F and defined may be NULL. */
PCV_API pcv_status pcv_operator_eval(const double* lambda, int n, int p, double* tilde_F, double* log_F,
                                     int* defined);

/* d tilde F / d lambda_k into grad[0..n-1]; lambda must lie in the open cone. */
PCV_API pcv_status pcv_operator_gradient(const double* lambda, int n, int p, double* grad);

/* Smallest p-subset sum; witness (may be NULL) receives p zero-based indices. */
PCV_API pcv_status pcv_cone_margin(const double* lambda, int n, int p, double* margin, int* witness);

PCV_API pcv_status pcv_theta_constant(int n, int p, double* theta);

/* Runs. */
PCV_API pcv_status pcv_run_create(const char* config_json, pcv_run** out);
/* *succeeded is 1 when every property passed or the solver converged with
 * the data hypotheses satisfied, else 0. */
PCV_API pcv_status pcv_run_execute(pcv_run* run, int* succeeded);
PCV_API pcv_status pcv_run_report_json(const pcv_run* run, const char** json);
PCV_API pcv_status pcv_run_summary(const pcv_run* run, const char** text);
PCV_API pcv_status pcv_run_output_dir(const pcv_run* run, const char** dir);
/* out_dir NULL means the configured output directory. */
PCV_API pcv_status pcv_run_write_artifacts(const pcv_run* run, const char* out_dir);
PCV_API void pcv_run_destroy(pcv_run* run);

#ifdef __cplusplus
}
#endif

#endif /* PCONVEX_PCONVEX_H */

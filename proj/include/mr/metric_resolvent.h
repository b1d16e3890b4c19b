/* metric_resolvent.h
 *
 * C interface to the metric-resolvent toolkit: fixed-point schemes of the
 * form b -> b + M((A + Q)^{-1} Q b - b) for structured monotone operators,
 * the splitting-algorithm gallery built on them, iteration traces, and the
 * convergence-rate verification pipeline.
 *
 * Conventions:
 *  - every handle is opaque and owned by the caller through the matching
 *    *_free function;
 *  - every function returns an mr_status; MR_OK is 0;
 *  - on failure, mr_last_error() returns a thread-local description of the
 *    most recent error in the calling thread;
 *  - vectors are plain double arrays with the length given by the handle's
 *    dimension query.
 *
 * The MR_OUTPUT_ROOT environment variable, when set, is prefixed to every
 * relative output path named in experiment configurations.
 */
#ifndef MR_METRIC_RESOLVENT_H
#define MR_METRIC_RESOLVENT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MR_API __declspec(dllexport)
#else
#define MR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mr_status {
    MR_OK = 0,
    MR_ERR_INVALID_ARGUMENT = 1,
    MR_ERR_DIMENSION = 2,
    MR_ERR_UNSUPPORTED = 3,
    MR_ERR_SINGULAR = 4,
    MR_ERR_RESIDUAL = 5,
    MR_ERR_NOT_CONVERGED = 6,
    MR_ERR_CONFIG = 7,
    MR_ERR_IO = 8,
    MR_ERR_INTERNAL = 9
} mr_status;

MR_API const char* mr_status_name(mr_status status);

/* thread-local message describing the last failure in this thread */
MR_API const char* mr_last_error(void);

/* ---- opaque handles ---------------------------------------------------- */

typedef struct mr_problem mr_problem;  /* a splitting problem instance   */
typedef struct mr_scheme mr_scheme;    /* a ready-to-iterate fixed-point scheme */
typedef struct mr_trace mr_trace;      /* a completed iteration trace    */

/* ---- problems ----------------------------------------------------------- */

/* JSON text in the problem-instance format (kind, functions, matrices) */
MR_API mr_status mr_problem_from_json(const char* json_text,
                                      mr_problem** out);

/* shipped generators: name is "lasso", "qp" or "basis_pursuit"; form
 * selects the template ("composite", "two_block", "equality"; NULL for
 * the generator's default) */
MR_API mr_status mr_problem_generate(const char* name, const char* form,
                                     int dim, uint64_t seed,
                                     mr_problem** out);

MR_API mr_status mr_problem_to_json(const mr_problem* problem, char** out);

MR_API void mr_problem_free(mr_problem* problem);

/* ---- schemes ------------------------------------------------------------ */

/* algorithm: "relaxed_admm", "proximal_admm", "pdhg_mp", "pdhg_mu",
 * "alm", "linearized_alm", "linearized_bregman"; params_json like
 * {"tau": 0.9, "gamma": 1.5} (see the catalog for each algorithm's
 * parameters and admissibility conditions) */
MR_API mr_status mr_scheme_build(const mr_problem* problem,
                                 const char* algorithm,
                                 const char* params_json, mr_scheme** out);

MR_API mr_status mr_scheme_dim(const mr_scheme* scheme, int* out);

/* one corrected step: writes b_next (required) and the proximal point
 * b_tilde (optional, may be NULL); arrays of length mr_scheme_dim */
MR_API mr_status mr_scheme_apply(const mr_scheme* scheme, const double* b,
                                 double* b_next, double* b_tilde);

/* iterate from b0 until the step seminorm drops below eps or max_iter */
MR_API mr_status mr_scheme_run(const mr_scheme* scheme, const double* b0,
                               int max_iter, double eps, mr_trace** out);

/* certified zero of the operator (direct solve or polished long run) */
MR_API mr_status mr_scheme_reference(const mr_scheme* scheme,
                                     const double* b0_hint, int long_iters,
                                     double* out);

MR_API void mr_scheme_free(mr_scheme* scheme);

/* ---- traces -------------------------------------------------------------- */

MR_API mr_status mr_trace_steps(const mr_trace* trace, int* out);

/* "max_iter", "residual_below", "divergence_guard" or "solver_error" */
MR_API mr_status mr_trace_stop_reason(const mr_trace* trace,
                                      const char** out);

/* channel: "res_S", "res_Q", "objective", "ergodic_objective", "dist_ref";
 * copies up to buflen values, sets *written to the channel length */
MR_API mr_status mr_trace_channel(const mr_trace* trace, const char* channel,
                                  double* buf, int buflen, int* written);

/* CSV written to csv_path; sidecar_path may be NULL to skip the sidecar */
MR_API mr_status mr_trace_write_csv(const mr_trace* trace,
                                    const char* csv_path,
                                    const char* sidecar_path);

MR_API void mr_trace_free(mr_trace* trace);

/* ---- experiment pipeline -------------------------------------------------- */

/* Runs the experiment described by the JSON config file: builds the
 * scheme, iterates, evaluates the requested checks, writes trace CSV,
 * sidecar and report. exit_code: 0 all checks pass, 1 configuration or
 * solve error, 2 check violations (reports still written). The
 * negative_control flag falsifies the rate-bound distance constants so a
 * working checker must fail. Returns MR_OK whenever the experiment ran
 * far enough to produce an exit code. */
MR_API mr_status mr_run_experiment(const char* config_path,
                                   int negative_control, int* exit_code);

/* inline-JSON variant; report_json (optional) receives the report text */
MR_API mr_status mr_run_experiment_json(const char* config_json,
                                        int negative_control, int* exit_code,
                                        char** report_json);

/* several config files on up to `jobs` concurrent workers */
MR_API mr_status mr_run_experiment_batch(const char* const* config_paths,
                                         int count, int jobs,
                                         int negative_control,
                                         int* exit_code);

/* 0 valid, 1 invalid (mr_last_error then carries the reason) */
MR_API mr_status mr_validate_config(const char* config_path, int* exit_code);

/* catalog of algorithms, rate formulas, property checks and generators */
MR_API mr_status mr_catalog(char** out);

/* frees strings returned through char** out-parameters */
MR_API void mr_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MR_METRIC_RESOLVENT_H */

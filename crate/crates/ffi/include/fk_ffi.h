#ifndef FK_FFI_H
#define FK_FFI_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FkStatus {
  FK_STATUS_OK = 0,
  FK_STATUS_NULL_POINTER = 1,
  FK_STATUS_INVALID_ARGUMENT = 2,
  FK_STATUS_UNKNOWN_NAME = 3,
  FK_STATUS_DIMENSION_MISMATCH = 4,
  FK_STATUS_OUTSIDE_DOMAIN = 5,
  FK_STATUS_MISSING_EXACT_SOLUTION = 6,
  FK_STATUS_STEP_CAP_EXCEEDED = 7,
  FK_STATUS_NUMERICAL = 8,
  FK_STATUS_BUFFER_TOO_SMALL = 9,
  FK_STATUS_PANIC = 10,
} FkStatus;

typedef enum FkTrainMode {
  FK_TRAIN_MODE_RESTART = 0,
  FK_TRAIN_MODE_FIXED_COHORT = 1,
} FkTrainMode;

typedef enum FkStopKind {
  FK_STOP_KIND_EXITS = 0,
  FK_STOP_KIND_STEPS = 1,
} FkStopKind;

/**
 * Exit condition and estimator choices for walks.
 */
typedef struct FkEstimatorConfig FkEstimatorConfig;

/**
 * A trained linear surrogate.
 */
typedef struct FkModel FkModel;

/**
 * A built-in boundary value problem.
 */
typedef struct FkProblem FkProblem;

typedef struct FkMcResult {
  double estimate;
  double std_error;
  uint64_t n_walkers;
  double mean_steps;
  double mean_exit_time;
  uint64_t n_capped;
  uint64_t n_unconverged;
} FkMcResult;

/**
 * Options for [`fk_train`]. Start from [`fk_train_options_default`].
 */
typedef struct FkTrainOptions {
  size_t n_walkers;
  double dt;
  enum FkTrainMode mode;
  enum FkStopKind stop_kind;
  uint64_t stop_count;
  uint64_t seed;
  uint64_t max_steps;
} FkTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fk_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * excluding the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t fk_last_error_message(char *buf, size_t len);

/**
 * Looks up a built-in problem: `poisson-disk`, `dirichlet-disk` or `barrier-1d`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FkStatus fk_problem_new(const char *name, struct FkProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`fk_problem_new`] not yet freed.
 */
void fk_problem_free(struct FkProblem *problem);

/**
 * Spatial dimension of the problem, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t fk_problem_dim(const struct FkProblem *problem);

/**
 * Exact solution at `x`, when the problem has one.
 *
 * # Safety
 * `problem` must be a live handle, `x` valid for `dim` reads and `out` writable.
 */
enum FkStatus fk_problem_exact(const struct FkProblem *problem,
                               const double *x,
                               size_t dim,
                               double *out);

/**
 * Max-sampling exits with corrected estimates throughout.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FkStatus fk_estimator_config_new(struct FkEstimatorConfig **out);

/**
 * Naive exit condition and naive estimates.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FkStatus fk_estimator_config_new_naive(struct FkEstimatorConfig **out);

/**
 * Sets one option by name, using the command-line spellings: `exit`,
 * `bubble-radius`, `t-est`, `x-est`, `f-est`, `g-est`, `theta`, `epsilon`,
 * `brf-max-iter`. The configuration is left unchanged on error.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum FkStatus fk_estimator_config_set(struct FkEstimatorConfig *config,
                                      const char *key,
                                      const char *value);

/**
 * # Safety
 * `config` must be null or a live handle.
 */
void fk_estimator_config_free(struct FkEstimatorConfig *config);

/**
 * Monte Carlo estimate of `u(x)` from `n` walkers with time step `dt`.
 * `step_cap` of 0 selects the default per-walker cap.
 *
 * # Safety
 * Handles must be live, `x` valid for `dim` reads and `out` writable.
 */
enum FkStatus fk_mc_estimate(const struct FkProblem *problem,
                             const struct FkEstimatorConfig *config,
                             const double *x,
                             size_t dim,
                             uint64_t n,
                             double dt,
                             uint64_t seed,
                             uint64_t step_cap,
                             struct FkMcResult *out);

struct FkTrainOptions fk_train_options_default(void);

/**
 * Trains a linear surrogate by TD learning with the automatic rate
 * schedule. `basis` is a feature list such as `"T0*T0,T2*T0,T0*T2"`, or
 * null for the problem's default basis. The new model is written to `out`.
 *
 * # Safety
 * Handles must be live, `basis` null or NUL-terminated, `options` and `out` valid.
 */
enum FkStatus fk_train(const struct FkProblem *problem,
                       const struct FkEstimatorConfig *config,
                       const char *basis,
                       const struct FkTrainOptions *options,
                       struct FkModel **out);

/**
 * Number of coefficients, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t fk_model_len(const struct FkModel *model);

/**
 * Copies the coefficients into `out`, which must hold `fk_model_len` values.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for `len` writes.
 */
enum FkStatus fk_model_coefficients(const struct FkModel *model, double *out, size_t len);

/**
 * Evaluates the surrogate at `x`.
 *
 * # Safety
 * `model` must be a live handle, `x` valid for `dim` reads and `out` writable.
 */
enum FkStatus fk_model_eval(const struct FkModel *model, const double *x, size_t dim, double *out);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
void fk_model_free(struct FkModel *model);

/**
 * Mean overshoot past a barrier in units of `sqrt(dt)`, from `n` walkers.
 *
 * # Safety
 * `mean` and `std_error` must be writable.
 */
enum FkStatus fk_overshoot(double dt, uint64_t n, uint64_t seed, double *mean, double *std_error);

/**
 * CDF of the first passage time of Brownian motion to level `a`.
 */
double fk_levy_fpt_cdf(double a, double t);

/**
 * Expected first hitting time of level `a` by the bridge from 0 to `x` over `[0, dt]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FkStatus fk_expected_exit_time(double a, double x, double dt, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FK_FFI_H */

#ifndef FACI_H
#define FACI_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FaciStatus {
  FACI_STATUS_OK = 0,
  FACI_STATUS_INVALID_ARGUMENT = 1,
  FACI_STATUS_NULL_POINTER = 2,
  FACI_STATUS_EMPTY_WINDOW = 3,
  FACI_STATUS_DEGENERATE_INPUT = 4,
  FACI_STATUS_HYPOTHESES_VIOLATED = 5,
  FACI_STATUS_NON_FINITE_WEIGHT = 6,
  FACI_STATUS_PANIC = 7,
  FACI_STATUS_OTHER = 8,
} FaciStatus;

typedef enum FaciEtaMode {
  FACI_ETA_MODE_FIXED = 0,
  FACI_ETA_MODE_WINDOWED = 1,
  FACI_ETA_MODE_DECAYING = 2,
} FaciEtaMode;

typedef enum FaciOutput {
  FACI_OUTPUT_AVERAGED = 0,
  FACI_OUTPUT_RANDOMIZED = 1,
} FaciOutput;

/**
 * Opaque expert ensemble.
 */
typedef struct FaciEnsemble FaciEnsemble;

/**
 * Opaque rolling score window.
 */
typedef struct FaciScoreWindow FaciScoreWindow;

/**
 * Inputs of the interval regret bound.
 */
typedef struct FaciRegretInputs {
  size_t interval_length;
  size_t k;
  double sigma;
  double eta;
  double sum_sq_losses;
  double path_length;
  double gamma_min;
  double gamma_max;
  double gamma_1;
} FaciRegretInputs;

typedef struct FaciRegretBound {
  double aggregation;
  double variance;
  double tracking;
  double total;
} FaciRegretBound;

/**
 * Outcome of one ensemble step.
 */
typedef struct FaciStepResult {
  double alpha_t;
  /**
   * 1 when `beta < alpha_t`.
   */
  uint8_t err;
  double eta;
  double sigma;
  /**
   * Selected expert, or -1 for the averaged output.
   */
  int64_t selected;
  double loss;
} FaciStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *faci_last_error(void);

/**
 * `alpha (beta - theta) - min(0, beta - theta)`.
 */
double faci_pinball_loss(double beta, double theta, double alpha);

/**
 * One ACI update `alpha_t + gamma (alpha - err)`, with `err = 1{beta < alpha_t}`.
 *
 * # Safety
 * `alpha_next` and `err` must be valid pointers.
 */
enum FaciStatus faci_aci_step(double alpha_t,
                              double gamma,
                              double alpha,
                              double beta,
                              double *alpha_next,
                              uint8_t *err);

/**
 * # Safety
 * `out` must be a valid pointer to an `f64`.
 */
enum FaciStatus faci_fixed_eta_heuristic(double alpha,
                                         size_t k,
                                         size_t interval_length,
                                         double *out);

/**
 * # Safety
 * `inputs` and `out` must be valid pointers.
 */
enum FaciStatus faci_dynamic_regret_bound(const struct FaciRegretInputs *inputs,
                                          struct FaciRegretBound *out);

/**
 * # Safety
 * `etas` and `sigmas` must point to `horizon` values; `out` must be valid.
 */
enum FaciStatus faci_long_term_coverage_bound(size_t horizon,
                                              double gamma_min,
                                              double gamma_max,
                                              const double *etas,
                                              const double *sigmas,
                                              double *out);

/**
 * # Safety
 * `out` must be a valid pointer; the handle is released with
 * [`faci_window_free`].
 */
enum FaciStatus faci_window_new(size_t capacity, struct FaciScoreWindow **out);

/**
 * # Safety
 * `w` must come from [`faci_window_new`] and not be used afterwards.
 */
void faci_window_free(struct FaciScoreWindow *w);

/**
 * # Safety
 * `w` must be a live window handle.
 */
enum FaciStatus faci_window_push(struct FaciScoreWindow *w, double score);

/**
 * Number of stored scores; 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live window handle.
 */
size_t faci_window_len(const struct FaciScoreWindow *w);

/**
 * # Safety
 * `w` must be a live window handle and `out` valid.
 */
enum FaciStatus faci_window_quantile(const struct FaciScoreWindow *w, double tau, double *out);

/**
 * # Safety
 * `w` must be a live window handle and `out` valid.
 */
enum FaciStatus faci_window_beta(const struct FaciScoreWindow *w, double score, double *out);

/**
 * Ensemble over `k` step sizes with the default schedule for `mode`.
 *
 * # Safety
 * `gammas` must point to `k` values and `out` be valid; the handle is
 * released with [`faci_ensemble_free`].
 */
enum FaciStatus faci_ensemble_new(const double *gammas,
                                  size_t k,
                                  double alpha,
                                  size_t interval_length,
                                  enum FaciEtaMode mode,
                                  struct FaciEnsemble **out);

/**
 * # Safety
 * `e` must come from [`faci_ensemble_new`] and not be used afterwards.
 */
void faci_ensemble_free(struct FaciEnsemble *e);

/**
 * One step on `beta`; `draw` in `[0, 1)` is used by the randomized output.
 *
 * # Safety
 * `e` must be a live ensemble handle and `out` valid.
 */
enum FaciStatus faci_ensemble_step(struct FaciEnsemble *e,
                                   double beta,
                                   enum FaciOutput output,
                                   double draw,
                                   struct FaciStepResult *out);

/**
 * Probability-weighted level of the current state.
 *
 * # Safety
 * `e` must be a live ensemble handle and `out` valid.
 */
enum FaciStatus faci_ensemble_alpha_bar(const struct FaciEnsemble *e, double *out);

/**
 * Copies the expert probabilities into `buf` (length `len >= k`).
 *
 * # Safety
 * `e` must be a live ensemble handle and `buf` point to `len` writable values.
 */
enum FaciStatus faci_ensemble_probabilities(const struct FaciEnsemble *e, double *buf, size_t len);

/**
 * Number of experts; 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live ensemble handle.
 */
size_t faci_ensemble_k(const struct FaciEnsemble *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACI_H */

#ifndef GGP_H
#define GGP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  GGP_STATUS_OK = 0,
  GGP_STATUS_NULL_POINTER = 1,
  GGP_STATUS_INVALID_ARGUMENT = 2,
  GGP_STATUS_DIMENSION_MISMATCH = 3,
  GGP_STATUS_UNDEFINED_PHASE = 4,
  GGP_STATUS_SINGULAR = 5,
  GGP_STATUS_PARSE = 6,
  GGP_STATUS_IO = 7,
  GGP_STATUS_PANIC = 8,
} GgpStatus;

typedef enum {
  GGP_TWO_LEVEL_KIND_SWAP_X = 0,
  GGP_TWO_LEVEL_KIND_HADAMARD = 1,
} GgpTwoLevelKind;

/**
 * Opaque Hermitian observable.
 */
typedef struct GgpObservable GgpObservable;

/**
 * Opaque state vector.
 */
typedef struct GgpState GgpState;

typedef struct {
  double value;
  double min_link_modulus;
  size_t chain_length;
} GgpPhaseResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread; valid until the next call that
 * fails on the same thread. Never null.
 */
const char *ggp_last_error(void);

/**
 * Creates a state from `dim` real and imaginary parts.
 *
 * # Safety
 * `re` and `im` must point to `dim` readable doubles; `out` must be writable.
 */
GgpStatus ggp_state_new(const double *re, const double *im, size_t dim, GgpState **out);

/**
 * # Safety
 * `state` must come from [`ggp_state_new`] and not be used afterwards.
 */
void ggp_state_free(GgpState *state);

/**
 * # Safety
 * `state` must be a live handle or null (returns 0).
 */
size_t ggp_state_dim(const GgpState *state);

/**
 * Creates an observable from a row-major `dim x dim` matrix.
 *
 * # Safety
 * `re` and `im` must point to `dim * dim` readable doubles; `out` must be
 * writable.
 */
GgpStatus ggp_observable_new(const double *re, const double *im, size_t dim, GgpObservable **out);

/**
 * # Safety
 * `out` must be writable.
 */
GgpStatus ggp_observable_identity(size_t dim, GgpObservable **out);

/**
 * # Safety
 * `o` must come from an observable constructor and not be used afterwards.
 */
void ggp_observable_free(GgpObservable *o);

/**
 * `Arg <a|O|b>`.
 *
 * # Safety
 * All handles must be live; `out` must be writable.
 */
GgpStatus ggp_relative_phase(const GgpState *a,
                             const GgpState *b,
                             const GgpObservable *o,
                             double *out);

/**
 * `<a|O|b> / <a|b>`.
 *
 * # Safety
 * All handles must be live; `out_re` and `out_im` must be writable.
 */
GgpStatus ggp_weak_value(const GgpState *a,
                         const GgpObservable *o,
                         const GgpState *b,
                         double *out_re,
                         double *out_im);

/**
 * Chain phase of `n` states; a null observable means bare overlaps.
 *
 * # Safety
 * `states` must point to `n` live state handles; `o` must be live or null;
 * `out` must be writable.
 */
GgpStatus ggp_chain_phase(const GgpState *const *states,
                          size_t n,
                          const GgpObservable *o,
                          GgpPhaseResult *out);

/**
 * # Safety
 * `out` must be writable.
 */
GgpStatus ggp_two_level_phase(GgpTwoLevelKind kind, double theta, double phi, double *out);

/**
 * Triple ordered phase integral from 0 to `t`.
 *
 * # Safety
 * `out_re` and `out_im` must be writable.
 */
GgpStatus ggp_f_mn(double w1, double w2, double w3, double t, double *out_re, double *out_im);

/**
 * Exact forward amplitude of the rank-1 separable potential.
 *
 * # Safety
 * `out_re` and `out_im` must be writable.
 */
GgpStatus ggp_separable_amplitude(double beta,
                                  double coupling,
                                  double mass,
                                  double k,
                                  double *out_re,
                                  double *out_im);

/**
 * `|Im f - k |f|^2|` for the exact separable amplitude.
 *
 * # Safety
 * `out` must be writable.
 */
GgpStatus ggp_optical_residual(double beta, double coupling, double mass, double k, double *out);

/**
 * Runs a JSON job (relative paths resolve against the working directory)
 * and returns the JSON report, to be released with [`ggp_string_free`].
 * `exit_code` receives 0 or 2 as the CLI would report.
 *
 * # Safety
 * `job` must be a NUL-terminated string; `report` and `exit_code` must be
 * writable.
 */
GgpStatus ggp_run_job_json(const char *job, char **report, uint8_t *exit_code);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ggp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GGP_H */

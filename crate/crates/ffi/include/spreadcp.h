#ifndef SPREADCP_H
#define SPREADCP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpcpStatus {
  SPCP_STATUS_OK = 0,
  /**
   * Bad parameter or malformed input.
   */
  SPCP_STATUS_VALIDATION = 1,
  /**
   * A numerical invariant failed.
   */
  SPCP_STATUS_INVARIANT = 2,
  /**
   * A backend size cap was exceeded.
   */
  SPCP_STATUS_CAP = 3,
  SPCP_STATUS_IO = 4,
  SPCP_STATUS_NULL_POINTER = 5,
  SPCP_STATUS_PANIC = 6,
} SpcpStatus;

/**
 * A real field on `{0..=n_max} x [-R, R]^d`.
 */
typedef struct SpcpField SpcpField;

/**
 * Model parameters: kernel, `eps`, `lambda`, horizon and window.
 */
typedef struct SpcpModel SpcpModel;

typedef struct SpcpLaceConstants {
  double residual;
  double lambda_c_eps;
  double a_eps;
  double v_eps;
  double denominator_margin;
} SpcpLaceConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *spcp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spcp_version(void);

/**
 * Uniform kernel of range `range` in dimension `d`. A `radius` of 0
 * selects `range * n_max`.
 *
 * # Safety
 * `out` must point to writable storage for a handle.
 */
enum SpcpStatus spcp_model_new(size_t d,
                               size_t range,
                               double eps,
                               double lambda,
                               size_t n_max,
                               size_t radius,
                               struct SpcpModel **out);

/**
 * # Safety
 * `model` must come from [`spcp_model_new`] and not be used afterwards.
 */
void spcp_model_free(struct SpcpModel *model);

/**
 * # Safety
 * `field` must come from this library and not be used afterwards.
 */
void spcp_field_free(struct SpcpField *field);

/**
 * Exact `tau` by the subset chain (window of at most 20 sites).
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SpcpStatus spcp_exact_two_point(const struct SpcpModel *model, struct SpcpField **out);

/**
 * Monte Carlo estimate of `tau`; deterministic in `seed`.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SpcpStatus spcp_estimate_two_point(const struct SpcpModel *model,
                                        uint64_t samples,
                                        uint64_t seed,
                                        struct SpcpField **out);

/**
 * `tau` from `pi` by the forward recursion.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SpcpStatus spcp_forward_solve(const struct SpcpField *pi,
                                   const struct SpcpModel *model,
                                   struct SpcpField **out);

/**
 * `pi` from `tau` by the inverse recursion.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SpcpStatus spcp_invert_to_pi(const struct SpcpField *tau,
                                  const struct SpcpModel *model,
                                  struct SpcpField **out);

/**
 * The delta field, i.e. the `pi` of the random walk.
 *
 * # Safety
 * `model` must be valid; `out` must be writable.
 */
enum SpcpStatus spcp_field_delta(const struct SpcpModel *model, struct SpcpField **out);

/**
 * Dimension, horizon and window radius of a field. Null outputs are
 * skipped.
 *
 * # Safety
 * `field` must be valid; non-null outputs must be writable.
 */
enum SpcpStatus spcp_field_shape(const struct SpcpField *field,
                                 size_t *d,
                                 size_t *n_max,
                                 size_t *radius);

/**
 * Number of values, `(n_max + 1) (2R + 1)^d`.
 *
 * # Safety
 * `field` must be valid or null (returns 0).
 */
size_t spcp_field_len(const struct SpcpField *field);

/**
 * Copies the values in row-major `(n, x)` order, the last coordinate
 * fastest. `len` must equal [`spcp_field_len`].
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum SpcpStatus spcp_field_copy(const struct SpcpField *field, double *buf, size_t len);

/**
 * Value at slice `n` and offset `x` (`d` coordinates).
 *
 * # Safety
 * `x` must hold `d` coordinates and `value` must be writable.
 */
enum SpcpStatus spcp_field_get(const struct SpcpField *field,
                               size_t n,
                               const int64_t *x,
                               double *value);

/**
 * Critical-point residual and the constants `A`, `v` from `pi`.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SpcpStatus spcp_lace_constants(const struct SpcpField *pi,
                                    const struct SpcpModel *model,
                                    double sigma2,
                                    struct SpcpLaceConstants *out);

/**
 * Truncated triangle sum of a `tau` field.
 *
 * # Safety
 * `tau` must be valid and `value` writable.
 */
enum SpcpStatus spcp_triangle(const struct SpcpField *tau, double *value);

/**
 * `eps sum_n tau^_n(0)` over the horizon.
 *
 * # Safety
 * `tau` must be valid and `value` writable.
 */
enum SpcpStatus spcp_susceptibility(const struct SpcpField *tau, double *value);

/**
 * Runs a TOML experiment config into `out_dir`, using the store named by
 * `SPREADCP_STORE`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum SpcpStatus spcp_run_config(const char *config, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPREADCP_H */

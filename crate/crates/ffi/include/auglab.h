#ifndef AUGLAB_H
#define AUGLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AuglabStatus {
  AUGLAB_STATUS_OK = 0,
  AUGLAB_STATUS_INVALID_ARGUMENT = 1,
  AUGLAB_STATUS_NULL_POINTER = 2,
  AUGLAB_STATUS_DIMENSION_MISMATCH = 3,
  AUGLAB_STATUS_CAPABILITY = 4,
  AUGLAB_STATUS_SINGULAR = 5,
  AUGLAB_STATUS_NUMERICAL = 6,
  AUGLAB_STATUS_PANIC = 7,
} AuglabStatus;

/**
 * Opaque group handle.
 */
typedef struct AuglabGroup AuglabGroup;

/**
 * Opaque experiment report handle.
 */
typedef struct AuglabReport AuglabReport;

/**
 * `f(x, d, out, out_len, user)`; nonzero return signals failure.
 */
typedef int (*AuglabPointFn)(const double *x, size_t d, double *out, size_t out_len, void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *auglab_version(void);

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *auglab_last_error_message(void);

/**
 * Builds a group from a `kind:dim` spec such as `"flip:4"` or `"perm:3"`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AuglabStatus auglab_group_new(const char *spec, struct AuglabGroup **out);

/**
 * # Safety
 * `g` must come from [`auglab_group_new`] and not be freed twice. NULL is a
 * no-op.
 */
void auglab_group_free(struct AuglabGroup *g);

/**
 * # Safety
 * `g` must be a live group handle and `out` a valid pointer.
 */
enum AuglabStatus auglab_group_dim(const struct AuglabGroup *g, size_t *out);

/**
 * Number of enumerated elements; `Capability` for sampler-backed groups.
 *
 * # Safety
 * `g` must be a live group handle and `out` a valid pointer.
 */
enum AuglabStatus auglab_group_order(const struct AuglabGroup *g, size_t *out);

/**
 * `out = g_element · x`, both of length `len = dim`.
 *
 * # Safety
 * `x` and `out` must point to `len` doubles.
 */
enum AuglabStatus auglab_group_apply(const struct AuglabGroup *g,
                                     size_t element,
                                     const double *x,
                                     size_t len,
                                     double *out);

/**
 * Writes the `dim × dim` mean matrix `E_g g` row-major into `out`.
 *
 * # Safety
 * `out` must point to `len` doubles with `len = dim²`.
 */
enum AuglabStatus auglab_group_mean_matrix(const struct AuglabGroup *g, double *out, size_t len);

/**
 * Exact orbit average `out = |G|⁻¹ Σ_g f(g x)` of a caller-supplied
 * statistic with `out_len` outputs.
 *
 * # Safety
 * `x` must point to `len` doubles, `out` to `out_len` doubles, and `f` must
 * write at most `out_len` values.
 */
enum AuglabStatus auglab_orbit_average(const struct AuglabGroup *g,
                                       AuglabPointFn f,
                                       void *user,
                                       const double *x,
                                       size_t len,
                                       double *out,
                                       size_t out_len);

/**
 * Exact Wasserstein-1 distance between two samples on the line.
 *
 * # Safety
 * `a` and `b` must point to `n` and `m` doubles.
 */
enum AuglabStatus auglab_wasserstein1_1d(const double *a,
                                         size_t n,
                                         const double *b,
                                         size_t m,
                                         double *out);

/**
 * MLE, augmented MLE and constrained MLE of a Gaussian mean from `n`
 * row-major observations of length `d`. Each output holds `d` doubles.
 *
 * # Safety
 * `data` must point to `n·d` doubles and each output to `d` doubles.
 */
enum AuglabStatus auglab_gaussian_mean_estimators(const struct AuglabGroup *g,
                                                  const double *data,
                                                  size_t n,
                                                  size_t d,
                                                  double *mle,
                                                  double *amle,
                                                  double *cmle);

/**
 * Runs a named experiment (`flip`, `poisson`, `circ`, `linreg`, `relu`,
 * `sphere`, `sgd`) with its default settings; `dim = 0` or `reps = 0`
 * selects the defaults for those too.
 *
 * # Safety
 * `name` must be NUL-terminated and `out` a valid pointer.
 */
enum AuglabStatus auglab_run_experiment(const char *name,
                                        size_t dim,
                                        size_t reps,
                                        uint64_t seed,
                                        struct AuglabReport **out);

/**
 * # Safety
 * `r` must come from [`auglab_run_experiment`]. NULL is a no-op.
 */
void auglab_report_free(struct AuglabReport *r);

/**
 * Mean and standard error of one summary entry.
 *
 * # Safety
 * Strings must be NUL-terminated; `mean` and `stderr` valid pointers.
 */
enum AuglabStatus auglab_report_summary(const struct AuglabReport *r,
                                        const char *grid_key,
                                        const char *metric,
                                        double *mean,
                                        double *stderr);

/**
 * Long-format CSV; free the result with [`auglab_string_free`].
 *
 * # Safety
 * `r` must be a live report and `out` a valid pointer.
 */
enum AuglabStatus auglab_report_to_csv(const struct AuglabReport *r, char **out);

/**
 * JSON with config, rows and summary; free with [`auglab_string_free`].
 *
 * # Safety
 * `r` must be a live report and `out` a valid pointer.
 */
enum AuglabStatus auglab_report_to_json(const struct AuglabReport *r, char **out);

/**
 * # Safety
 * `s` must come from this library. NULL is a no-op.
 */
void auglab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUGLAB_H */

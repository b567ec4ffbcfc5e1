#ifndef TAILCOND_H
#define TAILCOND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `TC_STATUS_OK` is zero.
 */
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_PARAMETER = 2,
  TC_STATUS_DOMAIN = 3,
  TC_STATUS_DIMENSION_MISMATCH = 4,
  TC_STATUS_OUT_OF_REGION = 5,
  TC_STATUS_DEGENERATE = 6,
  TC_STATUS_UNSUPPORTED = 7,
  TC_STATUS_SHORTFALL = 8,
  TC_STATUS_UNAVAILABLE_BUILTIN = 9,
  TC_STATUS_EMPTY = 10,
  TC_STATUS_CONFIG = 11,
  TC_STATUS_IO = 12,
  TC_STATUS_BUFFER_TOO_SMALL = 13,
  TC_STATUS_PANIC = 14,
} TcStatus;

typedef enum TcFamily {
  TC_FAMILY_GUMBEL = 0,
  TC_FAMILY_CLAYTON = 1,
  TC_FAMILY_FRANK = 2,
  TC_FAMILY_LOGISTIC = 3,
} TcFamily;

typedef enum TcNorm {
  TC_NORM_SUM = 0,
  TC_NORM_SUP = 1,
  /**
   * Uses the `q` argument of [`tc_model_new`].
   */
  TC_NORM_LOGISTIC = 2,
} TcNorm;

/**
 * Opaque generator handle.
 */
typedef struct TcGenerator TcGenerator;

/**
 * Opaque copula model handle.
 */
typedef struct TcModel TcModel;

/**
 * Outcome of [`tc_tail_test`].
 */
typedef struct TcTestResult {
  double statistic;
  double critical_value;
  bool reject;
} TcTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *tc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tc_version(void);

/**
 * Creates a generator. `theta` is p for the logistic family.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TcStatus tc_generator_new(enum TcFamily fam, double theta, struct TcGenerator **out);

/**
 * # Safety
 * `g` must come from [`tc_generator_new`] and not be used afterwards. NULL is ignored.
 */
void tc_generator_free(struct TcGenerator *g);

/**
 * φ(t) for t ∈ (0, 1].
 *
 * # Safety
 * `g` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_generator_phi(const struct TcGenerator *g, double t, double *out);

/**
 * φ′(t) for t ∈ (0, 1).
 *
 * # Safety
 * `g` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_generator_phi_prime(const struct TcGenerator *g, double t, double *out);

/**
 * φ″(t) for t ∈ (0, 1).
 *
 * # Safety
 * `g` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_generator_phi_second(const struct TcGenerator *g, double t, double *out);

/**
 * φ⁻¹(y) for y ≥ 0.
 *
 * # Safety
 * `g` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_generator_phi_inverse(const struct TcGenerator *g, double y, double *out);

/**
 * The tail index p of the generator.
 *
 * # Safety
 * `g` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_generator_tail_index(const struct TcGenerator *g, double *out);

/**
 * Creates an Archimax model of dimension `dim`. `q` is read only for [`TcNorm::Logistic`].
 * The generator is copied; the caller keeps ownership of `g`.
 *
 * # Safety
 * `g` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_model_new(const struct TcGenerator *g,
                           enum TcNorm norm,
                           double q,
                           size_t dim,
                           struct TcModel **out);

/**
 * # Safety
 * `m` must come from [`tc_model_new`] and not be used afterwards. NULL is ignored.
 */
void tc_model_free(struct TcModel *m);

/**
 * Dimension of the model, or 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t tc_model_dim(const struct TcModel *m);

/**
 * C(u) for a point of `len` = d coordinates.
 *
 * # Safety
 * `u` must point to `len` doubles; `m` must be a live handle; `out` valid for writes.
 */
enum TcStatus tc_model_cdf(const struct TcModel *m, const double *u, size_t len, double *out);

/**
 * H_{j,u}(v): the df of the other d − 1 coordinates at `v` given U_j = `u`.
 *
 * # Safety
 * `v` must point to `len` doubles; `m` must be a live handle; `out` valid for writes.
 */
enum TcStatus tc_model_conditional_cdf(const struct TcModel *m,
                                       size_t j,
                                       double u,
                                       const double *v,
                                       size_t len,
                                       double *out);

/**
 * The norming constants c and a_n for conditional maxima of block size `n`.
 *
 * # Safety
 * `m` must be a live handle; `out_c` and `out_a_n` valid for writes.
 */
enum TcStatus tc_model_norming_constants(const struct TcModel *m,
                                         double u,
                                         size_t j,
                                         uint64_t n,
                                         double *out_c,
                                         double *out_a_n);

/**
 * Draws `n` rows into `out` (row-major, n × d values). The same seed gives the same
 * rows on every platform and thread count.
 *
 * # Safety
 * `out` must be valid for `out_len` doubles; `m` must be a live handle.
 */
enum TcStatus tc_model_sample(const struct TcModel *m,
                              size_t n,
                              uint64_t seed,
                              double *out,
                              size_t out_len);

/**
 * Tests tail independence of a `reps` × `cols` maxima sample (row-major).
 *
 * With `monte_carlo` false the built-in quantiles are used (d = 2, 3 at α = 0.05);
 * otherwise the critical value comes from `replicates` null samples drawn under
 * `seed` (0 replicates selects the default).
 *
 * # Safety
 * `maxima` must point to `reps * cols` doubles; `out` valid for writes.
 */
enum TcStatus tc_tail_test(const double *maxima,
                           size_t reps,
                           size_t cols,
                           double alpha,
                           bool monte_carlo,
                           size_t replicates,
                           uint64_t seed,
                           struct TcTestResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAILCOND_H */

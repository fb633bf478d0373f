#ifndef BELLCORR_H
#define BELLCORR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BcStatus {
  BC_STATUS_OK = 0,
  BC_STATUS_NULL_POINTER = 1,
  BC_STATUS_INVALID_ARGUMENT = 2,
  BC_STATUS_DIMENSION = 3,
  BC_STATUS_SIZE_GUARD = 4,
  BC_STATUS_DEGENERATE_INPUT = 5,
  BC_STATUS_NUMERICAL = 6,
  BC_STATUS_INTERNAL = 7,
  BC_STATUS_PANIC = 8,
} BcStatus;

typedef enum BcMode {
  BC_MODE_INDEPENDENT = 0,
  BC_MODE_COUPLED = 1,
  BC_MODE_BERNOULLI = 2,
} BcMode;

typedef enum BcVerdict {
  BC_VERDICT_LOCAL = 0,
  BC_VERDICT_NONLOCAL = 1,
  BC_VERDICT_STATISTICAL = 2,
  BC_VERDICT_UNDECIDED = 3,
} BcVerdict;

/**
 * Opaque correlation matrix.
 */
typedef struct BcCorrelation BcCorrelation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `cap - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t bc_last_error(char *buf, size_t cap);

/**
 * Builds a correlation matrix from `n * n` row-major entries in `[-1, 1]`.
 *
 * # Safety
 * `data` must point to `n * n` doubles; `out` must be writable.
 */
enum BcStatus bc_correlation_new(size_t n, const double *data, struct BcCorrelation **out);

/**
 * Samples an `n x n` correlation matrix from `n` pairs of vectors in
 * dimension `m`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BcStatus bc_correlation_sample(size_t n,
                                    size_t m,
                                    uint64_t seed,
                                    enum BcMode mode,
                                    struct BcCorrelation **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void bc_correlation_free(struct BcCorrelation *handle);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or valid.
 */
size_t bc_correlation_size(const struct BcCorrelation *handle);

/**
 * # Safety
 * `handle` must be valid and `out` writable.
 */
enum BcStatus bc_correlation_get(const struct BcCorrelation *handle,
                                 size_t i,
                                 size_t j,
                                 double *out);

/**
 * Classical value `max s^T A t` over sign vectors, for `n <= 20`.
 *
 * # Safety
 * `data` must point to `n * n` doubles; `out` must be writable.
 */
enum BcStatus bc_classical_value(size_t n, const double *data, double *out);

/**
 * Projective norm bracket `lower <= norm <= upper`, for `n <= 20`.
 *
 * # Safety
 * `handle` must be valid; `upper` and `lower` must be writable.
 */
enum BcStatus bc_pi_norm(const struct BcCorrelation *handle,
                         double tol,
                         double *upper,
                         double *lower);

/**
 * Runs the certifier pipeline (row norms, full CHSH scan, exact norm for
 * `n <= n_exact`).
 *
 * # Safety
 * `handle` must be valid and `out` writable.
 */
enum BcStatus bc_classify(const struct BcCorrelation *handle, size_t n_exact, enum BcVerdict *out);

/**
 * Marcenko-Pastur tail fraction `f(C)` for `0 <= C <= 2`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BcStatus bc_mp_fraction(double c, double *out);

/**
 * Decoupling envelope `theta(alpha)` for `0 < alpha <= 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BcStatus bc_theta(double alpha, double *out);

/**
 * Threshold `alpha_0` for the given Grothendieck upper bound and classical
 * constant.
 *
 * # Safety
 * `out` must be writable.
 */
enum BcStatus bc_alpha0(double k_upper, double c_classical, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BELLCORR_H */

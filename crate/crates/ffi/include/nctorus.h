#ifndef NCTORUS_H
#define NCTORUS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NctStatus {
  NCT_STATUS_OK = 0,
  NCT_STATUS_NULL_POINTER = 1,
  NCT_STATUS_INVALID_PARAMETER = 2,
  NCT_STATUS_NON_POSITIVE_RANK = 3,
  NCT_STATUS_NOT_COPRIME = 4,
  NCT_STATUS_TAU_ORIENTATION = 5,
  /**
   * Rank gap, sign or quadrature could not be certified.
   */
  NCT_STATUS_CERTIFICATION_FAILURE = 6,
  NCT_STATUS_INTERNAL = 7,
  NCT_STATUS_PANIC = 8,
} NctStatus;

/**
 * Opaque holomorphic structure `∇̄ = ∇̄_τ + 2πiz` on `E_{d,c}(θ)^{⊕copies}`.
 */
typedef struct NctBundle NctBundle;

/**
 * Morita data of `E_{d,c}(θ)`.
 */
typedef struct NctMorita {
  /**
   * Completion `[[a, b], [c, d]] ∈ SL₂(ℤ)`.
   */
  int64_t a;
  int64_t b;
  /**
   * `θ′ = (aθ + b)/(cθ + d)`.
   */
  double theta_prime;
  double rank;
  int64_t dual_c;
  int64_t dual_d;
  double dual_theta;
} NctMorita;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread. The pointer stays valid until
 * the next failing call on the same thread.
 */
const char *nct_last_error(void);

/**
 * Creates a bundle handle. `out` receives null on failure.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum NctStatus nct_bundle_new(int64_t c,
                              int64_t d,
                              size_t copies,
                              double theta,
                              double tau_re,
                              double tau_im,
                              double z_re,
                              double z_im,
                              struct NctBundle **out);

/**
 * # Safety
 * `bundle` must be null or a handle from [`nct_bundle_new`] not yet freed.
 */
void nct_bundle_free(struct NctBundle *bundle);

/**
 * `rk = cθ + d` and `μ = c/rk` of one copy.
 *
 * # Safety
 * `bundle` must be a live handle; `rank` and `slope` valid out-pointers.
 */
enum NctStatus nct_bundle_rank(const struct NctBundle *bundle, double *rank, double *slope);

/**
 * Certified `dim H⁰`, `dim H¹` at truncation `n` (0 selects the default).
 * `min_gap` receives the smaller of the two singular-value gaps.
 *
 * # Safety
 * `bundle` must be a live handle; the out-pointers must be valid.
 */
enum NctStatus nct_cohomology(const struct NctBundle *bundle,
                              size_t n,
                              size_t *h0,
                              size_t *h1,
                              double *min_gap);

/**
 * Upper bound on the norm of the inverse-type operator `Q`.
 *
 * # Safety
 * `bundle` must be a live handle; `out` a valid out-pointer.
 */
enum NctStatus nct_q_bound(const struct NctBundle *bundle, double *out);

/**
 * Measured and predicted curvature constant of `[∇̄, ∇̄*]`.
 *
 * # Safety
 * `bundle` must be a live handle; the out-pointers must be valid.
 */
enum NctStatus nct_curvature(const struct NctBundle *bundle,
                             uint64_t seed,
                             double *measured,
                             double *expected);

/**
 * # Safety
 * `out` must be a valid out-pointer.
 */
enum NctStatus nct_morita_info(int64_t c, int64_t d, double theta, struct NctMorita *out);

/**
 * `χ(E₁, E₂)` for single copies.
 */
int64_t nct_euler_form(int64_t c1, int64_t d1, int64_t c2, int64_t d2);

/**
 * The entry `E_{−n} = (−n, d)` of the ample sequence above `rk_floor`.
 *
 * # Safety
 * `c` and `d` must be valid out-pointers.
 */
enum NctStatus nct_ample_entry(double theta, int64_t n, double rk_floor, int64_t *c, int64_t *d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCTORUS_H */

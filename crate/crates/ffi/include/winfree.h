#ifndef WINFREE_H
#define WINFREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WfBoundKind {
  WF_BOUND_KIND_SINCOS_MAIN = 0,
  WF_BOUND_KIND_SINCOS_MAIN_TAIL = 1,
  WF_BOUND_KIND_SINCOS_TIME = 2,
  WF_BOUND_KIND_SINCOS_TIME_LARGE = 3,
  WF_BOUND_KIND_ORDER_PARAM_CDF = 4,
  WF_BOUND_KIND_GENERAL_MAINCOR = 5,
  WF_BOUND_KIND_KAPPA_LARGE = 6,
  WF_BOUND_KIND_QUANT_IS = 7,
  WF_BOUND_KIND_ESCAPE_MEASURE = 8,
} WfBoundKind;

typedef enum WfFamily {
  WF_FAMILY_SINUSOIDAL = 0,
  /**
   * Parameter: integer exponent n ≥ 1.
   */
  WF_FAMILY_POWER_COSINE = 1,
  /**
   * Parameter: peak r in (-1, 1).
   */
  WF_FAMILY_RECTIFIED_POISSON = 2,
} WfFamily;

typedef enum WfStability {
  WF_STABILITY_STABLE = 0,
  WF_STABILITY_UNSTABLE = 1,
  WF_STABILITY_INDETERMINATE = 2,
} WfStability;

/**
 * Status codes returned by every fallible function.
 */
typedef enum WfStatus {
  WF_STATUS_OK = 0,
  WF_STATUS_NULL_POINTER = 1,
  WF_STATUS_INVALID_ARGUMENT = 2,
  WF_STATUS_DOMAIN = 3,
  WF_STATUS_UNSUPPORTED = 4,
  WF_STATUS_INTEGRATION_FAILURE = 5,
  WF_STATUS_NUMERIC = 6,
  WF_STATUS_SIZE_LIMIT = 7,
  WF_STATUS_BUFFER_TOO_SMALL = 8,
  WF_STATUS_PANIC = 9,
} WfStatus;

/**
 * Opaque: a list of equilibria.
 */
typedef struct WfEquilibria WfEquilibria;

/**
 * Opaque: frequencies, coupling and interaction functions.
 */
typedef struct WfSystem WfSystem;

/**
 * Opaque: a sampled trajectory.
 */
typedef struct WfTrajectory WfTrajectory;

/**
 * Bound inputs. Set unused fields to NaN.
 */
typedef struct WfBoundParams {
  double epsilon;
  double delta;
  double t;
  double c_mu;
  double beta;
  double r_star;
  double i_star;
  double t_level;
  double kappa;
  double omega_max;
} WfBoundParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, excluding the terminator.
 */
size_t wf_last_error_length(void);

/**
 * Copy the last error message into `buf` as a NUL-terminated string,
 * truncating if needed. Returns the number of bytes written without the NUL.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null with `len == 0`.
 */
size_t wf_last_error_message(char *buf, size_t len);

/**
 * Create a system with `n` frequencies and coupling `kappa`.
 *
 * `param` is the family parameter (exponent or peak); ignored for the sinusoidal family.
 *
 * # Safety
 * `omega` must point to `n` doubles; `out` must be a valid pointer.
 */
enum WfStatus wf_system_new(enum WfFamily family,
                            double param,
                            const double *omega,
                            size_t n,
                            double kappa,
                            struct WfSystem **out);

/**
 * # Safety
 * `sys` must come from [`wf_system_new`] and not be used afterwards. Null is ignored.
 */
void wf_system_free(struct WfSystem *sys);

/**
 * Number of oscillators, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be a live handle or null.
 */
size_t wf_system_n(const struct WfSystem *sys);

/**
 * Order parameter `R = (1/N) Σ I(θ_j)`.
 *
 * # Safety
 * `theta` must point to `n` doubles; `out` must be valid.
 */
enum WfStatus wf_order_parameter(const struct WfSystem *sys,
                                 const double *theta,
                                 size_t n,
                                 double *out);

/**
 * Vector field at `theta`, written to `out` (length `n`).
 *
 * # Safety
 * `theta` and `out` must each point to `n` doubles.
 */
enum WfStatus wf_vector_field(const struct WfSystem *sys,
                              const double *theta,
                              size_t n,
                              double *out);

/**
 * Divergence of the vector field at `theta`.
 *
 * # Safety
 * `theta` must point to `n` doubles; `out` must be valid.
 */
enum WfStatus wf_divergence(const struct WfSystem *sys, const double *theta, size_t n, double *out);

/**
 * Gradient-flow potential at `theta`.
 *
 * # Safety
 * `theta` must point to `n` doubles; `out` must be valid.
 */
enum WfStatus wf_potential(const struct WfSystem *sys, const double *theta, size_t n, double *out);

/**
 * Integrate with the adaptive Dormand–Prince method.
 *
 * # Safety
 * `theta0` must point to `n` doubles; `out` must be valid.
 */
enum WfStatus wf_simulate(const struct WfSystem *sys,
                          const double *theta0,
                          size_t n,
                          double horizon,
                          double sample_stride,
                          double abs_tol,
                          double rel_tol,
                          double max_dt,
                          struct WfTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`wf_simulate`] and not be used afterwards. Null is ignored.
 */
void wf_trajectory_free(struct WfTrajectory *traj);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
size_t wf_trajectory_len(const struct WfTrajectory *traj);

/**
 * Copy sample times into `out` (capacity `len`).
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum WfStatus wf_trajectory_times(const struct WfTrajectory *traj, double *out, size_t len);

/**
 * Copy the order-parameter series into `out` (capacity `len`).
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum WfStatus wf_trajectory_order_parameter(const struct WfTrajectory *traj,
                                            double *out,
                                            size_t len);

/**
 * Copy unwrapped phases, row-major (`samples × N`), into `out` (capacity `len`).
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum WfStatus wf_trajectory_states(const struct WfTrajectory *traj, double *out, size_t len);

/**
 * Second-half secant rotation numbers, one per oscillator.
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum WfStatus wf_rotation_numbers(const struct WfTrajectory *traj, double *out, size_t len);

/**
 * Death flags (1 if sup - inf < 2π after `window_start`), one per oscillator.
 *
 * # Safety
 * `out` must be valid for `len` bytes.
 */
enum WfStatus wf_detect_death(const struct WfTrajectory *traj,
                              double window_start,
                              uint8_t *out,
                              size_t len);

/**
 * Critical coupling of the sinusoidal model. Zero frequencies give 0.
 *
 * # Safety
 * `omega` must point to `n` doubles; `out` must be valid.
 */
enum WfStatus wf_critical_coupling(const double *omega, size_t n, double *out);

/**
 * Threshold coefficient `K_c(R0)` for `R0 ∈ (0, 2]`.
 *
 * # Safety
 * `out` must be valid.
 */
enum WfStatus wf_kc_coefficient(double r0, double *out);

/**
 * Guaranteed limit of the order parameter for `kappa > 2 omega_max`.
 *
 * # Safety
 * `out` must be valid.
 */
enum WfStatus wf_limit_r_lower_bound(double omega_max, double kappa, double *out);

/**
 * Closed-form probability bound for `n` oscillators with the sinusoidal spec.
 *
 * `out_t0` (nullable) receives the crossover time for finite-time bounds, NaN otherwise.
 *
 * # Safety
 * `params` and `out` must be valid; `out_t0` may be null.
 */
enum WfStatus wf_probability_bound(enum WfBoundKind kind,
                                   size_t n,
                                   const struct WfBoundParams *params,
                                   double *out,
                                   double *out_t0);

/**
 * Enumerate equilibria of a sinusoidal system.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be valid.
 */
enum WfStatus wf_enumerate_equilibria(const struct WfSystem *sys, struct WfEquilibria **out);

/**
 * # Safety
 * `eqs` must come from [`wf_enumerate_equilibria`] and not be used afterwards. Null is ignored.
 */
void wf_equilibria_free(struct WfEquilibria *eqs);

/**
 * Number of equilibria, or 0 for a null handle.
 *
 * # Safety
 * `eqs` must be a live handle or null.
 */
size_t wf_equilibria_len(const struct WfEquilibria *eqs);

/**
 * Read equilibrium `index`: order parameter, canonical phases (capacity `len`) and stability.
 *
 * # Safety
 * `out_r`, `out_stability` must be valid; `theta` valid for `len` doubles.
 */
enum WfStatus wf_equilibria_get(const struct WfEquilibria *eqs,
                                size_t index,
                                double *out_r,
                                double *theta,
                                size_t len,
                                enum WfStability *out_stability);

/**
 * Coefficients of the equilibrium polynomial W, ascending, into `coeffs`
 * (capacity `len`, needs `2^(N+1) + 1`). `out_degree` receives the degree.
 *
 * # Safety
 * `coeffs` valid for `len` doubles; `out_degree` valid.
 */
enum WfStatus wf_w_polynomial(const struct WfSystem *sys,
                              double *coeffs,
                              size_t len,
                              size_t *out_degree);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WINFREE_H */

#ifndef FAULTROUTE_H
#define FAULTROUTE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FrStatus {
  FR_STATUS_OK = 0,
  FR_STATUS_INVALID_PARAMS = 1,
  FR_STATUS_DOMAIN = 2,
  FR_STATUS_NOT_ERGODIC = 3,
  FR_STATUS_NUMERICAL = 4,
  FR_STATUS_NON_MONOTONE = 5,
  FR_STATUS_CERTIFICATE_INVALID = 6,
  FR_STATUS_INCONSISTENT = 7,
  FR_STATUS_NULL_POINTER = 8,
  FR_STATUS_OUT_OF_RANGE = 9,
  FR_STATUS_PANIC = 10,
} FrStatus;

typedef enum FrClassification {
  FR_CLASSIFICATION_CERTIFIED_STABLE = 0,
  FR_CLASSIFICATION_CERTIFIED_UNSTABLE = 1,
  FR_CLASSIFICATION_INDETERMINATE = 2,
} FrClassification;

/**
 * Network parameters.
 */
typedef struct FrParams FrParams;

/**
 * Mode transition rates.
 */
typedef struct FrRates FrRates;

/**
 * A simulated trajectory.
 */
typedef struct FrTrajectory FrTrajectory;

typedef struct FrVerdict {
  bool necessary_holds;
  /**
   * `F1 − lhs1`, `F2 − lhs2`, `1 − η`.
   */
  double slacks[3];
  /**
   * First violated necessary inequality, 1..3, or 0.
   */
  uint32_t violated;
  bool sufficient_holds;
  /**
   * Valid when `sufficient_holds`.
   */
  double theta[2];
  double drift;
  enum FrClassification classification;
} FrVerdict;

typedef struct FrBounds {
  double lower;
  double upper;
  uint32_t upper_violation;
  double tolerance;
  bool has_witness;
  double theta[2];
  double drift;
} FrBounds;

typedef struct FrSimConfig {
  double horizon;
  double step;
  uint64_t seed;
  /**
   * When false, the run starts at the congestion floors.
   */
  bool has_x0;
  double x0[2];
  /**
   * Initial mode, 1..4.
   */
  uint8_t s0;
  double sample_interval;
  double divergence_cap;
} FrSimConfig;

typedef struct FrTrajectorySummary {
  size_t samples;
  size_t jumps;
  double mode_occupancy[4];
  double avg_abs_x;
  bool diverged;
  /**
   * Valid when `diverged`.
   */
  double diverged_at;
  double end_time;
} FrTrajectorySummary;

typedef struct FrSample {
  double t;
  uint8_t mode;
  double x1;
  double x2;
  double avg_abs_x;
} FrSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *fr_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *fr_version(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum FrStatus fr_params_new(double f1, double f2, double beta, double eta, struct FrParams **out);

/**
 * # Safety
 * `params` must be null or come from [`fr_params_new`], freed once.
 */
void fr_params_free(struct FrParams *params);

/**
 * `lambda` is row-major `λ[s][s']`, 16 entries, zero diagonal.
 *
 * # Safety
 * `lambda` must point to 16 doubles; `out` must be valid for writes.
 */
enum FrStatus fr_rates_new(const double *lambda, struct FrRates **out);

/**
 * Chain `λ_{s,s'} = κ p_{s'}` with stationary distribution `p`.
 *
 * # Safety
 * `p` must point to 4 doubles; `out` must be valid for writes.
 */
enum FrStatus fr_rates_from_distribution(const double *p, double kappa, struct FrRates **out);

/**
 * # Safety
 * `rates` must be null or come from this library, freed once.
 */
void fr_rates_free(struct FrRates *rates);

/**
 * # Safety
 * `rates` must be a live handle; `out` must point to 4 writable doubles.
 */
enum FrStatus fr_stationary_distribution(const struct FrRates *rates, double *out);

/**
 * Congestion floors of both links; an unbounded floor is `INFINITY`.
 *
 * # Safety
 * `params` must be a live handle; `out` must point to 2 writable doubles.
 */
enum FrStatus fr_congestion_floor(const struct FrParams *params, double *out);

/**
 * Sufficient-condition drift at `theta`.
 *
 * # Safety
 * `params` must be a live handle, `p` 4 doubles, `theta` 2 doubles, `out` writable.
 */
enum FrStatus fr_sufficient_value(const struct FrParams *params,
                                  const double *p,
                                  const double *theta,
                                  double *out);

/**
 * Necessary and sufficient tests at the demand stored in `params`.
 *
 * # Safety
 * `params` must be a live handle, `p` 4 doubles, `out` writable.
 */
enum FrStatus fr_check(const struct FrParams *params, const double *p, struct FrVerdict *out);

/**
 * Numeric throughput bounds; the demand stored in `params` is ignored.
 *
 * # Safety
 * `params` must be a live handle, `p` 4 doubles, `out` writable.
 */
enum FrStatus fr_throughput_bounds(const struct FrParams *params,
                                   const double *p,
                                   struct FrBounds *out);

/**
 * `1 / (1 + p2 + p3)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FrStatus fr_homogeneous_lower_bound(double p2, double p3, double *out);

/**
 * `1 / (1 + 2p(1 − p − ρ))`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FrStatus fr_correlation_bound(double p, double rho, double *out);

/**
 * Lower bound for `F1 − F2 = d_f`, `p3 = p2`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FrStatus fr_hetero_lower_bound(double d_f, double p1, double p2, double *out);

/**
 * Default simulation settings.
 */
struct FrSimConfig fr_sim_config_default(void);

/**
 * # Safety
 * `params` and `rates` must be live handles, `cfg` readable, `out` writable.
 */
enum FrStatus fr_simulate(const struct FrParams *params,
                          const struct FrRates *rates,
                          const struct FrSimConfig *cfg,
                          struct FrTrajectory **out);

/**
 * # Safety
 * `traj` must be a live handle, `out` writable.
 */
enum FrStatus fr_trajectory_summary(const struct FrTrajectory *traj,
                                    struct FrTrajectorySummary *out);

/**
 * # Safety
 * `traj` must be a live handle, `out` writable.
 */
enum FrStatus fr_trajectory_sample(const struct FrTrajectory *traj,
                                   size_t index,
                                   struct FrSample *out);

/**
 * # Safety
 * `traj` must be null or come from [`fr_simulate`], freed once.
 */
void fr_trajectory_free(struct FrTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAULTROUTE_H */

#ifndef GAMEDYN_H
#define GAMEDYN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GdStatus {
  GD_STATUS_OK = 0,
  GD_STATUS_NULL_POINTER = 1,
  GD_STATUS_INVALID_ARGUMENT = 2,
  GD_STATUS_DIVERGED = 3,
  GD_STATUS_IO = 4,
  GD_STATUS_BUFFER_TOO_SMALL = 5,
  GD_STATUS_UNKNOWN_MODEL = 6,
  GD_STATUS_PANIC = 7,
} GdStatus;

typedef enum GdModel {
  GD_MODEL_RD = 0,
  GD_MODEL_FTRL = 1,
  GD_MODEL_DP = 2,
  GD_MODEL_SHO_FTRL = 3,
  GD_MODEL_SHO_DP = 4,
  GD_MODEL_BNN = 5,
  GD_MODEL_SMITH = 6,
  GD_MODEL_LOGIT = 7,
  GD_MODEL_TP = 8,
  GD_MODEL_EXRD = 9,
  GD_MODEL_RD_LATENCY = 10,
} GdModel;

typedef enum GdContractivity {
  GD_CONTRACTIVITY_STRICTLY_CONTRACTIVE = 0,
  GD_CONTRACTIVITY_CONTRACTIVE = 1,
  GD_CONTRACTIVITY_NOT_CONTRACTIVE = 2,
} GdContractivity;

/**
 * Payoff signal or matrix game.
 */
typedef struct GdPayoffSource GdPayoffSource;

/**
 * Sampled trajectory.
 */
typedef struct GdTrajectory GdTrajectory;

/**
 * Model parameters and integration settings for `gd_integrate`.
 */
typedef struct GdConfig {
  double dt;
  double horizon;
  size_t record_every;
  double lambda;
  double gamma;
} GdConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len`. Returns the untruncated
 * length including the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t gd_last_error_message(char *buf, size_t len);

/**
 * Defaults: `dt = 1e-3`, `T = 500`, every 10th step recorded, `lambda = gamma = 1`.
 */
struct GdConfig gd_config_default(void);

/**
 * Euclidean projection of `y[0..n]` onto the simplex, written to `out[0..n]`.
 *
 * # Safety
 * `y` and `out` must point to `n` doubles.
 */
enum GdStatus gd_project_simplex(const double *y, size_t n, double *out);

/**
 * Projection of `p` onto the tangent cone of the simplex at `x`.
 *
 * # Safety
 * `x`, `p` and `out` must point to `n` doubles.
 */
enum GdStatus gd_project_tangent_cone(const double *x, const double *p, size_t n, double *out);

/**
 * # Safety
 * `z` and `out` must point to `n` doubles.
 */
enum GdStatus gd_softmax(const double *z, size_t n, double *out);

/**
 * Look up a model by its command-line name (`"rd"`, `"sho-ftrl"`, ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum GdStatus gd_model_from_name(const char *name, enum GdModel *out);

/**
 * Constant payoff vector `c[0..n]`.
 *
 * # Safety
 * `c` must point to `n` doubles; `out` must be writable.
 */
enum GdStatus gd_source_constant(const double *c, size_t n, struct GdPayoffSource **out);

/**
 * `p(t) = [sin t, 0.5]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GdStatus gd_source_example1(struct GdPayoffSource **out);

/**
 * `p(t) = [sin t, -sin t]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GdStatus gd_source_example2(struct GdPayoffSource **out);

/**
 * Seeded random sum of sinusoids with up to `terms` terms per coordinate.
 *
 * # Safety
 * `out` must be writable.
 */
enum GdStatus gd_source_random(size_t n, size_t terms, uint64_t seed, struct GdPayoffSource **out);

/**
 * Linear game `F(x) = A x` with `A` given row-major as `n * n` doubles.
 *
 * # Safety
 * `a` must point to `n * n` doubles; `out` must be writable.
 */
enum GdStatus gd_source_game(const double *a, size_t n, struct GdPayoffSource **out);

/**
 * Strategy dimension of a payoff source, 0 for null.
 *
 * # Safety
 * `src` must be null or a live handle.
 */
size_t gd_source_dim(const struct GdPayoffSource *src);

/**
 * # Safety
 * `src` must be null or a handle not yet freed.
 */
void gd_source_free(struct GdPayoffSource *src);

/**
 * Integrate `model` from `x0[0..n]` against `src`.
 *
 * # Safety
 * `x0` must point to `n` doubles, `src` must be a live handle and `out`
 * writable.
 */
enum GdStatus gd_integrate(enum GdModel model,
                           struct GdConfig config,
                           const double *x0,
                           size_t n,
                           const struct GdPayoffSource *src,
                           struct GdTrajectory **out);

/**
 * Number of recorded samples, 0 for null.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t gd_trajectory_len(const struct GdTrajectory *traj);

/**
 * Strategy dimension, 0 for null.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t gd_trajectory_dim(const struct GdTrajectory *traj);

/**
 * Sample times; `out` needs `gd_trajectory_len` doubles.
 *
 * # Safety
 * `out` must point to `cap` writable doubles.
 */
enum GdStatus gd_trajectory_times(const struct GdTrajectory *traj, double *out, size_t cap);

/**
 * Strategy at sample `k`; `out` needs `gd_trajectory_dim` doubles.
 *
 * # Safety
 * `out` must point to `gd_trajectory_dim(traj)` writable doubles.
 */
enum GdStatus gd_trajectory_strategy(const struct GdTrajectory *traj, size_t k, double *out);

/**
 * Payoff at sample `k`; `out` needs `gd_trajectory_dim` doubles.
 *
 * # Safety
 * `out` must point to `gd_trajectory_dim(traj)` writable doubles.
 */
enum GdStatus gd_trajectory_payoff(const struct GdTrajectory *traj, size_t k, double *out);

/**
 * Cumulative regret against the fixed strategy `anchor[0..n]`, one value
 * per sample.
 *
 * # Safety
 * `anchor` must point to `n` doubles and `out` to `cap` writable doubles.
 */
enum GdStatus gd_regret(const struct GdTrajectory *traj,
                        const double *anchor,
                        size_t n,
                        double *out,
                        size_t cap);

/**
 * Running average reward, one value per sample.
 *
 * # Safety
 * `out` must point to `cap` writable doubles.
 */
enum GdStatus gd_average_reward(const struct GdTrajectory *traj, double *out, size_t cap);

/**
 * Write the trajectory CSV (`t, x_i, p_i, xdot_i, pdot_i`) to `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum GdStatus gd_trajectory_write_csv(const struct GdTrajectory *traj, const char *path);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void gd_trajectory_free(struct GdTrajectory *traj);

/**
 * Classify the game `A` (row-major `n * n`) and report the largest
 * eigenvalue of `A + A'` on the tangent space.
 *
 * # Safety
 * `a` must point to `n * n` doubles; `class` and `min_pairing` writable.
 */
enum GdStatus gd_contractivity(const double *a,
                               size_t n,
                               size_t samples,
                               uint64_t seed,
                               enum GdContractivity *class_,
                               double *min_pairing);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAMEDYN_H */

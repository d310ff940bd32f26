#ifndef STAB_LAB_H
#define STAB_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StabScheme {
  STAB_SCHEME_TAMED_EULER = 0,
  STAB_SCHEME_EULER = 1,
} StabScheme;

typedef enum StabStatus {
  STAB_STATUS_OK = 0,
  STAB_STATUS_NULL_POINTER = 1,
  STAB_STATUS_INVALID_PARAMS = 2,
  STAB_STATUS_DERIVATION = 3,
  STAB_STATUS_NUMERIC = 4,
  STAB_STATUS_BLOW_UP = 5,
  STAB_STATUS_FIT_UNAVAILABLE = 6,
  STAB_STATUS_IO = 7,
  STAB_STATUS_PANIC = 8,
} StabStatus;

/**
 * Opaque constant ledger.
 */
typedef struct StabLedger StabLedger;

/**
 * Opaque model parameters.
 */
typedef struct StabModel StabModel;

/**
 * Opaque simulated path.
 */
typedef struct StabTrajectory StabTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *stab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stab_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void stab_string_free(char *s);

/**
 * `profile` is `linear`, `neg-linear` or `sine-perturbed`.
 *
 * # Safety
 * `profile` must be a NUL-terminated string and `out_model` writable.
 */
enum StabStatus stab_model_new(uint32_t m,
                               uint32_t n,
                               double q,
                               double eps_x,
                               double eps_y,
                               const char *profile,
                               struct StabModel **out_model);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
void stab_model_free(struct StabModel *model);

/**
 * Switches between the full drift and the pure Hamiltonian flow.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum StabStatus stab_model_set_pure_hamiltonian(struct StabModel *model, bool pure);

/**
 * # Safety
 * `model` must be a live handle; `fx`, `fy` writable.
 */
enum StabStatus stab_drift(const struct StabModel *model,
                           double x,
                           double y,
                           double *fx,
                           double *fy);

/**
 * Forward blow-up time of the Hamiltonian flow; `has_blowup` is false when the
 * solution from `(x, y)` is global. Fails for `m == n`.
 *
 * # Safety
 * `model` must be a live handle; outputs writable.
 */
enum StabStatus stab_blowup_time(const struct StabModel *model,
                                 double x,
                                 double y,
                                 bool *has_blowup,
                                 double *t_star);

/**
 * # Safety
 * `model` must be a live handle and `out_ledger` writable.
 */
enum StabStatus stab_ledger_derive(const struct StabModel *model, struct StabLedger **out_ledger);

/**
 * # Safety
 * `ledger` must be null or a live handle.
 */
void stab_ledger_free(struct StabLedger *ledger);

/**
 * Reads one named constant (`c1`, `k2`, `C3`, ...).
 *
 * # Safety
 * `ledger` must be a live handle, `name` NUL-terminated, `value` writable.
 */
enum StabStatus stab_ledger_get(const struct StabLedger *ledger, const char *name, double *value);

/**
 * Replaces one named constant.
 *
 * # Safety
 * `ledger` must be a live handle and `name` NUL-terminated.
 */
enum StabStatus stab_ledger_set(struct StabLedger *ledger, const char *name, double value);

/**
 * Whether every ledger invariant holds for `model`.
 *
 * # Safety
 * Handles must be live and `holds` writable.
 */
enum StabStatus stab_ledger_invariants_hold(const struct StabLedger *ledger,
                                            const struct StabModel *model,
                                            bool *holds);

/**
 * Ledger as a JSON object; release with `stab_string_free`.
 *
 * # Safety
 * `ledger` must be a live handle and `json` writable.
 */
enum StabStatus stab_ledger_to_json(const struct StabLedger *ledger, char **json);

/**
 * Value of the global Lyapunov function at `(x, y)`.
 *
 * # Safety
 * Handles must be live and `value` writable.
 */
enum StabStatus stab_global_v(const struct StabModel *model,
                              const struct StabLedger *ledger,
                              double x,
                              double y,
                              double *value);

/**
 * Checks one drift inequality (`v1`, `v2`, `v3`, `v12`, `v13` or `V`) on
 * `samples` points of its region.
 *
 * # Safety
 * Handles must be live, `function` NUL-terminated, outputs writable.
 */
enum StabStatus stab_verify(const struct StabModel *model,
                            const struct StabLedger *ledger,
                            const char *function,
                            size_t samples,
                            uint64_t seed,
                            bool *pass,
                            double *max_violation);

/**
 * One sample path of `steps` steps from `(x0, y0)`.
 *
 * # Safety
 * `model` must be a live handle and `out_traj` writable.
 */
enum StabStatus stab_simulate(const struct StabModel *model,
                              enum StabScheme scheme,
                              double dt,
                              uint64_t steps,
                              uint64_t seed,
                              double x0,
                              double y0,
                              struct StabTrajectory **out_traj);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
void stab_trajectory_free(struct StabTrajectory *traj);

/**
 * Number of recorded states; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t stab_trajectory_len(const struct StabTrajectory *traj);

/**
 * Whether the path was cut short by a non-finite state.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
bool stab_trajectory_blowup(const struct StabTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle and the outputs writable.
 */
enum StabStatus stab_trajectory_get(const struct StabTrajectory *traj,
                                    size_t index,
                                    double *t,
                                    double *x,
                                    double *y);

/**
 * Exact empirical Wasserstein-1 distance between two clouds of `n` points
 * given as coordinate arrays.
 *
 * # Safety
 * Each array must hold `n` readable values and `w1` be writable.
 */
enum StabStatus stab_wasserstein1(const double *ax,
                                  const double *ay,
                                  const double *bx,
                                  const double *by,
                                  size_t n,
                                  double *w1);

/**
 * Least-squares fit of `d(t) ~ C exp(-c t)` on the positive entries.
 *
 * # Safety
 * `times` and `values` must hold `n` readable values; outputs writable.
 */
enum StabStatus stab_fit_exponential(const double *times,
                                     const double *values,
                                     size_t n,
                                     double *big_c,
                                     double *c,
                                     double *r2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAB_LAB_H */

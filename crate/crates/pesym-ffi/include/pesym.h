#ifndef PESYM_H
#define PESYM_H

/* Generated by cbindgen from the pesym-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  PESYM_STATUS_OK = 0,
  PESYM_STATUS_INVALID_ARGUMENT = 1,
  PESYM_STATUS_NULL_POINTER = 2,
  PESYM_STATUS_SOLVE_FAILED = 3,
  PESYM_STATUS_VERIFICATION_FAILED = 4,
  PESYM_STATUS_IO = 5,
  PESYM_STATUS_PANIC = 6,
} PesymStatus;

/**
 * Opaque front-fixed simulation handle.
 */
typedef struct PesymSim PesymSim;

/**
 * Model parameters of the tumour-growth problem.
 * n is the radial index (0 planar, 1 cylindrical, 2 spherical); the
 * closed-form solution path requires beta = 1.
 */
typedef struct {
  double m;
  double alpha_s;
  double c_inf;
  double omega0;
  double q0;
  int32_t n;
  double beta;
} PesymModelParams;

/**
 * Result of a shooting solve.
 */
typedef struct {
  double omega0;
  double phi0;
  double psi0;
  double defect;
  uintptr_t iterations;
} PesymShootResult;

/**
 * Sup-norm errors of a simulation against the closed-form solution.
 */
typedef struct {
  uintptr_t n_cells;
  double t_final;
  double err_alpha_sup;
  double err_c_sup;
  double err_front;
} PesymErrorReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pesym_version(void);

/**
 * Human-readable message for a status code (static storage).
 */
const char *pesym_status_message(PesymStatus status);

/**
 * Closed-form solution fields at (t, r): cell concentration alpha,
 * nutrient/drug concentration c, and front radius.
 *
 * # Safety
 * `out_alpha`, `out_c` and `out_front` must be valid writable pointers.
 */
PesymStatus pesym_exact_fields(PesymModelParams params,
                               double t,
                               double r,
                               double *out_alpha,
                               double *out_c,
                               double *out_front);

/**
 * Closed-form similarity profiles on a uniform grid of `len` nodes over
 * [0, omega0]: fills omega, phi and psi.
 *
 * # Safety
 * The three buffers must hold at least `len` f64 values each.
 */
PesymStatus pesym_exact_profile(PesymModelParams params,
                                uintptr_t len,
                                double *out_omega,
                                double *out_phi,
                                double *out_psi);

/**
 * Solve the reduced free-endpoint problem by shooting, with sources built
 * from the closed-form construction for the given parameters.
 *
 * # Safety
 * `out` must be a valid writable pointer.
 */
PesymStatus pesym_shoot(PesymModelParams params, PesymShootResult *out);

/**
 * Create a front-fixed simulation initialised from the closed-form
 * solution at t0 with the exact-compatible sources. Returns null on
 * invalid arguments; free with `pesym_sim_free`.
 */
PesymSim *pesym_sim_new(PesymModelParams params, uintptr_t n_cells, double cfl, double t0);

/**
 * Release a simulation handle.
 *
 * # Safety
 * `sim` must come from `pesym_sim_new` and must not be used afterwards.
 */
void pesym_sim_free(PesymSim *sim);

/**
 * Advance a simulation to `t_target`.
 *
 * # Safety
 * `sim` must be a live handle from `pesym_sim_new`.
 */
PesymStatus pesym_sim_advance(PesymSim *sim, double t_target);

/**
 * Current simulation time.
 *
 * # Safety
 * `sim` must be a live handle.
 */
double pesym_sim_time(const PesymSim *sim);

/**
 * Current front radius R(t).
 *
 * # Safety
 * `sim` must be a live handle.
 */
double pesym_sim_front(const PesymSim *sim);

/**
 * Number of grid nodes (cells + 1).
 *
 * # Safety
 * `sim` must be a live handle.
 */
uintptr_t pesym_sim_nodes(const PesymSim *sim);

/**
 * Copy the current shifted fields U = alpha - alpha_s and V = c_inf - c
 * into caller buffers of at least `len` values (len must equal the node
 * count).
 *
 * # Safety
 * `sim` must be a live handle and the buffers writable for `len` values.
 */
PesymStatus pesym_sim_values(const PesymSim *sim, double *out_u, double *out_v, uintptr_t len);

/**
 * Sup-norm errors of the current state against the closed-form solution.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
PesymStatus pesym_sim_error_report(const PesymSim *sim, PesymErrorReport *out);

/**
 * Run the full classification-catalog verification below `catalog_dir`
 * (a NUL-terminated path). Writes the number of passed and failed entries;
 * returns Ok only when every entry passes.
 *
 * # Safety
 * `catalog_dir` must be a valid NUL-terminated string; the out pointers
 * must be writable.
 */
PesymStatus pesym_verify_symmetries(const char *catalog_dir,
                                    uint64_t seed,
                                    uint32_t *out_passed,
                                    uint32_t *out_failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PESYM_H */

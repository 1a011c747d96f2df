#ifndef STIFFLAB_H
#define STIFFLAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Interface condition at the origin.
 */
typedef enum StlPhase {
  /**
   * Two reflected half-lines.
   */
  STL_PHASE_SEPARATE = 0,
  /**
   * Snapping-out coupling with rate `kappa`.
   */
  STL_PHASE_SNAPPING = 1,
  /**
   * No interface.
   */
  STL_PHASE_CONTINUOUS = 2,
} StlPhase;

/**
 * Result codes.
 */
typedef enum StlStatus {
  STL_STATUS_OK = 0,
  STL_STATUS_NULL_POINTER = 1,
  /**
   * Parameters or array lengths rejected by validation.
   */
  STL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Assembly or solver breakdown.
   */
  STL_STATUS_NUMERICAL = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  STL_STATUS_PANIC = 4,
} StlStatus;

/**
 * Opaque discrete form.
 */
typedef struct StlForm StlForm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *stl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stl_version(void);

/**
 * Assemble the Brownian form on `[-half_width, half_width]` with spacing `h`.
 *
 * `kappa` is used only for [`StlPhase::Snapping`].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum StlStatus stl_form_brownian(double half_width,
                                 double h,
                                 enum StlPhase phase,
                                 double kappa,
                                 struct StlForm **out);

/**
 * Build a form from nodes, dual-cell masses, `n - 1` edge conductances and
 * killing weights. A repeated `0.0` node pair marks a doubled origin.
 *
 * # Safety
 * `nodes`, `mass` and `killing` must point to `n` values, `edges` to `n - 1`
 * values, and `out` to writable storage for one handle.
 */
enum StlStatus stl_form_from_parts(size_t n,
                                   const double *nodes,
                                   const double *mass,
                                   const double *edges,
                                   const double *killing,
                                   struct StlForm **out);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `form` must be null or a live handle.
 */
size_t stl_form_len(const struct StlForm *form);

/**
 * Copy the node coordinates into `x_out` (length `n`).
 *
 * # Safety
 * `form` must be a live handle and `x_out` must point to `n` writable values.
 */
enum StlStatus stl_form_nodes(const struct StlForm *form, double *x_out, size_t n);

/**
 * Energy `E(u, v)`.
 *
 * # Safety
 * `form` must be a live handle; `u` and `v` must point to `n` values and
 * `out` to one writable value.
 */
enum StlStatus stl_form_energy(const struct StlForm *form,
                               const double *u,
                               const double *v,
                               size_t n,
                               double *out);

/**
 * Solve `(alpha M + A) u = M f` into `u_out`.
 *
 * # Safety
 * `form` must be a live handle; `f` and `u_out` must point to `n` values.
 */
enum StlStatus stl_form_resolvent(const struct StlForm *form,
                                  double alpha,
                                  const double *f,
                                  size_t n,
                                  double *u_out);

/**
 * Evolve the heat equation from `u0` to `t_end` with Crank–Nicolson steps
 * of size `dt` and write the final state to `u_out`.
 *
 * # Safety
 * `form` must be a live handle; `u0` and `u_out` must point to `n` values.
 */
enum StlStatus stl_form_heat(const struct StlForm *form,
                             const double *u0,
                             size_t n,
                             double dt,
                             double t_end,
                             double *u_out);

/**
 * Release a handle; null is ignored.
 *
 * # Safety
 * `form` must be null or a handle not yet freed.
 */
void stl_form_free(struct StlForm *form);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* STIFFLAB_H */

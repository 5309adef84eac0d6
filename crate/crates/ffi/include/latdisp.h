#ifndef LATDISP_H
#define LATDISP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which bilaplacian drives a flow.
 */
typedef enum LdFlowKind {
  LD_FLOW_KIND_DISCRETE = 0,
  LD_FLOW_KIND_CONTINUUM = 1,
} LdFlowKind;

/**
 * Result codes; `LD_STATUS_OK` is zero.
 */
typedef enum LdStatus {
  LD_STATUS_OK = 0,
  LD_STATUS_NULL_POINTER = 1,
  LD_STATUS_INVALID_ARGUMENT = 2,
  LD_STATUS_INVALID_GRID = 3,
  LD_STATUS_SIZE_MISMATCH = 4,
  LD_STATUS_GRID_MISMATCH = 5,
  LD_STATUS_NON_FINITE = 6,
  LD_STATUS_QUADRATURE_UNCONVERGED = 7,
  LD_STATUS_QUADRATURE_BUDGET = 8,
  LD_STATUS_NAN_DETECTED = 9,
  LD_STATUS_REFERENCE_UNCONVERGED = 10,
  LD_STATUS_FORMAT = 11,
  LD_STATUS_IO = 12,
  LD_STATUS_JSON = 13,
  LD_STATUS_PANIC = 14,
} LdStatus;

/**
 * Opaque complex field on a grid.
 */
typedef struct LdField LdField;

/**
 * Opaque lattice grid.
 */
typedef struct LdGrid LdGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ld_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *ld_version(void);

/**
 * Grid with `points^dim` sites of spacing `mesh`.
 */
enum LdStatus ld_grid_new(size_t dim, size_t points, double mesh, struct LdGrid **out);

void ld_grid_free(struct LdGrid *grid);

/**
 * Number of sites.
 */
enum LdStatus ld_grid_len(const struct LdGrid *grid, size_t *out);

/**
 * Field from `2 * len` interleaved doubles, `len` equal to the site count.
 */
enum LdStatus ld_field_new(const struct LdGrid *grid,
                           const double *values,
                           size_t len,
                           struct LdField **out);

void ld_field_free(struct LdField *field);

/**
 * Copies the values into `2 * len` interleaved doubles.
 */
enum LdStatus ld_field_values(const struct LdField *field, double *out, size_t len);

/**
 * Cell averages of `amplitude * exp(-|z - center|^2 / width^2)` (periodized)
 * on a 2D grid.
 */
enum LdStatus ld_field_gaussian(const struct LdGrid *grid,
                                double center_x,
                                double center_y,
                                double width,
                                double amplitude_re,
                                double amplitude_im,
                                struct LdField **out);

/**
 * Lattice `L^p` norm; `p` may be `INFINITY`.
 */
enum LdStatus ld_lp_norm(const struct LdField *field, double p, double *out);

/**
 * Inhomogeneous Sobolev norm of order `s` with the continuum multiplier
 * (`discrete_op = 0`) or the lattice one (`discrete_op != 0`).
 */
enum LdStatus ld_sobolev_norm(const struct LdField *field,
                              double s,
                              int32_t discrete_op,
                              double *out);

/**
 * Littlewood-Paley piece at scale `N = 2^-k`.
 */
enum LdStatus ld_project(const struct LdField *field, uint32_t k, struct LdField **out);

/**
 * Exact linear flow to time `t`.
 */
enum LdStatus ld_linear_propagate(const struct LdField *field,
                                  double t,
                                  enum LdFlowKind kind,
                                  struct LdField **out);

/**
 * Strang-split nonlinear flow to `final_time` with step `step`.
 */
enum LdStatus ld_solve(const struct LdField *field,
                       double final_time,
                       double step,
                       double lambda,
                       double p,
                       enum LdFlowKind kind,
                       struct LdField **out);

/**
 * `sup_y |K_{N,1}(y, s)|` for `N = 2^-k`, with the accepted quadrature size.
 */
enum LdStatus ld_kernel_sup(uint32_t k,
                            double s,
                            double tol,
                            size_t max_points,
                            double *out_sup,
                            size_t *out_points);

/**
 * Writes `field` as a binary snapshot at `path`.
 */
enum LdStatus ld_snapshot_write(const struct LdField *field, double time, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATDISP_H */

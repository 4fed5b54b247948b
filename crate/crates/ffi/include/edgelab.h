#ifndef EDGELAB_H
#define EDGELAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C interface.
 */
typedef enum {
  EDGELAB_STATUS_OK = 0,
  EDGELAB_STATUS_NULL_POINTER = 1,
  EDGELAB_STATUS_INVALID_ARGUMENT = 2,
  EDGELAB_STATUS_CONFIG = 3,
  EDGELAB_STATUS_RESOLUTION = 4,
  EDGELAB_STATUS_GEOMETRY = 5,
  EDGELAB_STATUS_SOLVER = 6,
  EDGELAB_STATUS_IO = 7,
  EDGELAB_STATUS_FORMAT = 8,
  EDGELAB_STATUS_PANIC = 9,
} EdgelabStatus;

typedef struct EdgelabField EdgelabField;

typedef struct EdgelabGrid EdgelabGrid;

typedef struct EdgelabHierarchy EdgelabHierarchy;

typedef struct EdgelabOperator EdgelabOperator;

typedef struct EdgelabWall EdgelabWall;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *edgelab_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *edgelab_last_error(void);

/**
 * Periodic grid on `[-l1, l1) x [-l2, l2)`; sizes must be powers of two.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
EdgelabStatus edgelab_grid_new(size_t n1, size_t n2, double l1, double l2, EdgelabGrid **out);

/**
 * # Safety
 * `grid` must be NULL or a handle from [`edgelab_grid_new`] not yet freed.
 */
void edgelab_grid_free(EdgelabGrid *grid);

/**
 * Number of grid points, 0 for a NULL handle.
 *
 * # Safety
 * `grid` must be NULL or a live grid handle.
 */
size_t edgelab_grid_len(const EdgelabGrid *grid);

/**
 * Domain wall by family name (`linear`, `tanh`, `circle`, ...) and
 * parameter list, as in config files.
 *
 * # Safety
 * `family` must be a NUL-terminated string, `params` must point to
 * `n_params` doubles (or be NULL when `n_params` is 0), `out` must be writable.
 */
EdgelabStatus edgelab_wall_new(const char *family,
                               const double *params,
                               size_t n_params,
                               EdgelabWall **out);

/**
 * # Safety
 * `wall` must be NULL or a live wall handle.
 */
void edgelab_wall_free(EdgelabWall *wall);

/**
 * Evaluate `kappa` at `(x1, x2)`.
 *
 * # Safety
 * `wall` must be a live wall handle and `value` writable.
 */
EdgelabStatus edgelab_wall_value(const EdgelabWall *wall, double x1, double x2, double *value);

/**
 * Zero field on `grid` at time 0.
 *
 * # Safety
 * `grid` must be a live grid handle and `out` writable.
 */
EdgelabStatus edgelab_field_zeros(const EdgelabGrid *grid, EdgelabField **out);

/**
 * Ballistic edge wave of the straight wall with angle `theta` and slope `r`,
 * Gaussian profile, at time `t`.
 *
 * # Safety
 * `grid` must be a live grid handle and `out` writable.
 */
EdgelabStatus edgelab_field_ballistic(const EdgelabGrid *grid,
                                      double theta,
                                      double r,
                                      double epsilon,
                                      double t,
                                      EdgelabField **out);

/**
 * # Safety
 * `field` must be NULL or a live field handle.
 */
void edgelab_field_free(EdgelabField *field);

/**
 * Copy one component (`0` or `1`) into `out` as interleaved `re, im`
 * pairs; `out` must hold `2 * len` doubles where `len` is the grid size.
 *
 * # Safety
 * `field` must be a live field handle and `out` must point to `out_len` doubles.
 */
EdgelabStatus edgelab_field_get(const EdgelabField *field,
                                uint32_t component,
                                double *out,
                                size_t out_len);

/**
 * Overwrite one component from interleaved `re, im` pairs.
 *
 * # Safety
 * `field` must be a live field handle and `data` must point to `len` doubles.
 */
EdgelabStatus edgelab_field_set(EdgelabField *field,
                                uint32_t component,
                                const double *data,
                                size_t len);

/**
 * L2 norm of the field, NaN for a NULL handle.
 *
 * # Safety
 * `field` must be NULL or a live field handle.
 */
double edgelab_field_norm(const EdgelabField *field);

/**
 * Time stamp of the field, NaN for a NULL handle.
 *
 * # Safety
 * `field` must be NULL or a live field handle.
 */
double edgelab_field_time(const EdgelabField *field);

/**
 * L2 distance between two fields on the same grid.
 *
 * # Safety
 * `a`, `b` must be live field handles and `out` writable.
 */
EdgelabStatus edgelab_field_distance(const EdgelabField *a, const EdgelabField *b, double *out);

/**
 * Write the field as a binary snapshot.
 *
 * # Safety
 * `field` must be a live field handle, `path` a NUL-terminated string.
 */
EdgelabStatus edgelab_field_write_snapshot(const EdgelabField *field,
                                           double epsilon,
                                           const char *path);

/**
 * Write the density as a 16-bit PGM heatmap.
 *
 * # Safety
 * `field` must be a live field handle, `path` a NUL-terminated string.
 */
EdgelabStatus edgelab_field_write_heatmap(const EdgelabField *field, const char *path);

/**
 * Dirac operator with mass `kappa` sampled from `wall` on `grid`.
 *
 * # Safety
 * `grid`, `wall` must be live handles and `out` writable.
 */
EdgelabStatus edgelab_operator_new(const EdgelabGrid *grid,
                                   const EdgelabWall *wall,
                                   double epsilon,
                                   EdgelabOperator **out);

/**
 * # Safety
 * `op` must be NULL or a live operator handle.
 */
void edgelab_operator_free(EdgelabOperator *op);

/**
 * `out = H input`; `out` must be a field on the same grid.
 *
 * # Safety
 * All handles must be live; `input` and `out` may not alias.
 */
EdgelabStatus edgelab_operator_apply(const EdgelabOperator *op,
                                     const EdgelabField *input,
                                     EdgelabField *out);

/**
 * Advance `field` in place by Crank-Nicolson over `duration` with step
 * `dt` (`dt <= 0` selects `epsilon / 20`). The largest relative norm drift
 * is stored in `max_drift` when non-NULL.
 *
 * # Safety
 * `op`, `field` must be live handles; `max_drift` NULL or writable.
 */
EdgelabStatus edgelab_evolve(const EdgelabOperator *op,
                             EdgelabField *field,
                             double dt,
                             double duration,
                             double *max_drift);

/**
 * Amplitude hierarchy along the interface trajectory from `(y1, y2)` with
 * Gaussian leading profile, valid for `t` in `[0, t_max]`.
 *
 * # Safety
 * `wall` must be a live handle and `out` writable.
 */
EdgelabStatus edgelab_hierarchy_new(const EdgelabWall *wall,
                                    double y1,
                                    double y2,
                                    double t_max,
                                    uint32_t max_order,
                                    EdgelabHierarchy **out);

/**
 * # Safety
 * `h` must be NULL or a live hierarchy handle.
 */
void edgelab_hierarchy_free(EdgelabHierarchy *h);

/**
 * Ansatz of the given order at time `t`, sampled on `grid`.
 *
 * # Safety
 * `h`, `grid` must be live handles and `out` writable.
 */
EdgelabStatus edgelab_hierarchy_sample(const EdgelabHierarchy *h,
                                       double t,
                                       uint32_t order,
                                       double epsilon,
                                       const EdgelabGrid *grid,
                                       EdgelabField **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDGELAB_H */

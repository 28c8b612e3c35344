#ifndef FORMLAB_H
#define FORMLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Gauge method selector.
 */
typedef enum FormlabGaugeMethod {
  FORMLAB_GAUGE_METHOD_FEM = 0,
  FORMLAB_GAUGE_METHOD_NEUMANN_SERIES = 1,
  FORMLAB_GAUGE_METHOD_FIXED_POINT = 2,
} FormlabGaugeMethod;

/**
 * Result codes.
 */
typedef enum FormlabStatus {
  FORMLAB_STATUS_OK = 0,
  /**
   * At least one scenario operation failed; the record is still returned.
   */
  FORMLAB_STATUS_OPERATION_FAILED = 1,
  /**
   * Malformed scenario, example id or JSON.
   */
  FORMLAB_STATUS_INVALID_CONFIG = 2,
  FORMLAB_STATUS_IO = 3,
  FORMLAB_STATUS_NULL_POINTER = 4,
  FORMLAB_STATUS_INVALID_ARGUMENT = 5,
  FORMLAB_STATUS_INVALID_MESH = 6,
  FORMLAB_STATUS_UNSUPPORTED = 7,
  FORMLAB_STATUS_COERCIVITY_LOST = 8,
  FORMLAB_STATUS_SERIES_DIVERGENCE = 9,
  FORMLAB_STATUS_SOLVE_FAILED = 10,
  FORMLAB_STATUS_NON_CONVERGENCE = 11,
  /**
   * Output buffer too short.
   */
  FORMLAB_STATUS_BUFFER_TOO_SMALL = 12,
  FORMLAB_STATUS_PANIC = 13,
  FORMLAB_STATUS_OTHER = 14,
} FormlabStatus;

/**
 * Mesh handle.
 */
typedef struct FormlabMesh FormlabMesh;

/**
 * Potential handle.
 */
typedef struct FormlabPotential FormlabPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *formlab_last_error(void);

/**
 * Library version, static storage.
 */
const char *formlab_version(void);

/**
 * Uniform mesh of `elements` elements on `(a, b)`. `dimension` 0 or 1 gives
 * the flat measure, `n >= 2` the radial measure of `R^n`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum FormlabStatus formlab_mesh_uniform(double a,
                                        double b,
                                        size_t elements,
                                        uint32_t dimension,
                                        struct FormlabMesh **out);

/**
 * Geometrically graded mesh on `(a, b)`, `0 < a`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum FormlabStatus formlab_mesh_geometric(double a,
                                          double b,
                                          size_t elements,
                                          uint32_t dimension,
                                          struct FormlabMesh **out);

/**
 * Number of nodes, 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t formlab_mesh_node_count(const struct FormlabMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void formlab_mesh_free(struct FormlabMesh *mesh);

/**
 * Potential of a catalog entry, e.g. `"hardy(n=3, c=0.16)"`.
 *
 * # Safety
 * `id` must be a nul-terminated string, `out` writable.
 */
enum FormlabStatus formlab_potential_from_example(const char *id, struct FormlabPotential **out);

/**
 * Potential from its JSON record, e.g.
 * `{"kind":"atomic","atoms":[{"location":0.5,"mass":2.0}]}`.
 *
 * # Safety
 * `json` must be a nul-terminated string, `out` writable.
 */
enum FormlabStatus formlab_potential_from_json(const char *json, struct FormlabPotential **out);

/**
 * # Safety
 * `potential` must be null or a handle not yet freed.
 */
void formlab_potential_free(struct FormlabPotential *potential);

/**
 * Upper and lower form bounds of `potential` on `mesh` (with `A = I`).
 *
 * # Safety
 * Handles must be live; `upper` and `lower` writable.
 */
enum FormlabStatus formlab_form_bounds(const struct FormlabMesh *mesh,
                                       const struct FormlabPotential *potential,
                                       double *upper,
                                       double *lower);

/**
 * Gauge `u = 1 + G(sigma u)` on the flat unit interval. Writes the nodal
 * values into `values` (length `capacity`, at least the node count) and
 * `u(1/2)` into `center`.
 *
 * # Safety
 * Handles must be live; `values` must hold `capacity` doubles; `center`
 * writable.
 */
enum FormlabStatus formlab_gauge(const struct FormlabMesh *mesh,
                                 const struct FormlabPotential *potential,
                                 enum FormlabGaugeMethod method,
                                 double *values,
                                 size_t capacity,
                                 double *center);

/**
 * Runs a scenario given as TOML or JSON text and hands back the run record
 * as JSON. Returns `OperationFailed` (with the record) if any operation
 * failed.
 *
 * # Safety
 * `config` must be a nul-terminated string, `record` writable. Free the
 * record with [`formlab_string_free`].
 */
enum FormlabStatus formlab_run_scenario(const char *config, char **record);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `text` must be null or a string from this library, not yet freed.
 */
void formlab_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORMLAB_H */

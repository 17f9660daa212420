#ifndef SEAMSIM_H
#define SEAMSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SeamsimStatus {
  SEAMSIM_STATUS_OK = 0,
  SEAMSIM_STATUS_NULL_POINTER = 1,
  SEAMSIM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The exhaustive oracle would exceed its enumeration budget.
   */
  SEAMSIM_STATUS_BUDGET_EXCEEDED = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  SEAMSIM_STATUS_INTERNAL = 4,
} SeamsimStatus;

/**
 * A weighted matching graph: lattice geometry plus noise.
 */
typedef struct SeamsimCode SeamsimCode;

/**
 * Monte Carlo logical failure estimate with its 95% Wilson interval.
 */
typedef struct SeamsimEstimate {
  uint64_t shots;
  uint64_t failures;
  double p_fail;
  double ci_low;
  double ci_high;
} SeamsimEstimate;

/**
 * Bound evaluations at one bulk error rate, with the seam rate on the
 * equal-ratio line. Divergent bounds are `INFINITY`.
 */
typedef struct SeamsimBoundsRow {
  double p_b;
  double p_s;
  size_t distance;
  /**
   * Homogeneous walk bound on the seam alone.
   */
  double seam_homogeneous;
  /**
   * Homogeneous walk bound on the bulk alone.
   */
  double bulk_homogeneous;
  /**
   * Bound on chains that cross the seam with bulk excursions.
   */
  double cross_bound;
  /**
   * Cross bound on the equal-ratio line with the rigorous corner constant.
   */
  double equal_ratio_bound;
  /**
   * Decoupled bulk-plus-seam model.
   */
  double decoupled_model;
  /**
   * Single-seam threshold sagged by bulk noise.
   */
  double sagged_single_seam;
  /**
   * Two-seam threshold sagged by bulk noise.
   */
  double sagged_two_seam;
} SeamsimBoundsRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a code of the given distance with `rounds` noisy measurement rounds
 * and `seams` seams (0, 1 or 2; `separation` is read only for 2).
 * `p_bulk` is the per-gate bulk error rate and `p_seam` the seam rate.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum SeamsimStatus seamsim_code_new(size_t distance,
                                    size_t rounds,
                                    uint32_t seams,
                                    size_t separation,
                                    double p_bulk,
                                    double p_seam,
                                    struct SeamsimCode **out);

/**
 * Releases a handle from [`seamsim_code_new`]. Null is ignored.
 *
 * # Safety
 * `code` must be null or a handle not yet freed.
 */
void seamsim_code_free(struct SeamsimCode *code);

/**
 * Number of matching-graph vertices including the boundary, or 0 for null.
 *
 * # Safety
 * `code` must be null or a live handle.
 */
size_t seamsim_code_num_vertices(const struct SeamsimCode *code);

/**
 * Number of error locations (graph edges), or 0 for null.
 *
 * # Safety
 * `code` must be null or a live handle.
 */
size_t seamsim_code_num_edges(const struct SeamsimCode *code);

/**
 * Estimates the logical failure probability from `shots` decoded samples.
 * Results depend only on `seed`, never on `workers` (0 uses all cores).
 *
 * # Safety
 * `code` must be a live handle and `out` valid for writing.
 */
enum SeamsimStatus seamsim_estimate(const struct SeamsimCode *code,
                                    uint64_t shots,
                                    uint64_t seed,
                                    size_t workers,
                                    struct SeamsimEstimate *out);

/**
 * Exact logical failure probability by exhaustive enumeration. Returns
 * `SEAMSIM_STATUS_BUDGET_EXCEEDED` for graphs too large to enumerate.
 *
 * # Safety
 * `code` must be a live handle and `out` valid for writing.
 */
enum SeamsimStatus seamsim_exact_failure_probability(const struct SeamsimCode *code, double *out);

/**
 * Evaluates the walk-counting bounds for a `ds`-dimensional seam in a
 * `db`-dimensional bulk at bulk rate `p_b`, code distance `distance` and
 * seam separation `h`.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum SeamsimStatus seamsim_bounds_row(uint32_t ds,
                                      uint32_t db,
                                      double p_b,
                                      size_t distance,
                                      size_t h,
                                      struct SeamsimBoundsRow *out);

/**
 * Copies the calling thread's last error message into `buf` as a
 * nul-terminated string, truncating to `len` bytes. Returns the buffer size
 * needed for the whole message, or 0 if there is none. `buf` may be null to
 * query the size.
 *
 * # Safety
 * `buf` must be null or valid for writing `len` bytes.
 */
size_t seamsim_last_error(char *buf, size_t len);

/**
 * Library version as a static nul-terminated string.
 */
const char *seamsim_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEAMSIM_H */

#ifndef DIVERSITY_H
#define DIVERSITY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DvStatus {
  DV_STATUS_OK = 0,
  DV_STATUS_NULL_POINTER = 1,
  DV_STATUS_INVALID_INPUT = 2,
  /**
   * The indicator has no value on the given subset.
   */
  DV_STATUS_UNDEFINED = 3,
  DV_STATUS_IO = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  DV_STATUS_PANIC = 5,
} DvStatus;

typedef enum DvIndicatorKind {
  DV_INDICATOR_KIND_MAX_MIN = 0,
  DV_INDICATOR_KIND_RIESZ = 1,
  DV_INDICATOR_KIND_SOLOW_POLASKY = 2,
  DV_INDICATOR_KIND_SUM = 3,
} DvIndicatorKind;

typedef enum DvPhase {
  DV_PHASE_INITIAL = 0,
  DV_PHASE_OBJECTIVE_OPT = 1,
  DV_PHASE_BARRIER_LOWER = 2,
  DV_PHASE_DIVERSITY_OPT = 3,
} DvPhase;

/**
 * Opaque undirected graph.
 */
typedef struct DvGraph DvGraph;

/**
 * Opaque distance matrix.
 */
typedef struct DvMatrix DvMatrix;

/**
 * Opaque NOAH run trace.
 */
typedef struct DvTrace DvTrace;

/**
 * Indicator choice. `param` is the Riesz exponent `s` or the
 * Solow-Polasky decay `theta`; ignored otherwise.
 */
typedef struct DvIndicator {
  enum DvIndicatorKind kind;
  double param;
} DvIndicator;

/**
 * Summary of one trace record. `hausdorff` is NaN when not measured.
 */
typedef struct DvTraceRecord {
  uintptr_t iteration;
  enum DvPhase phase;
  double maxmin;
  double riesz_energy;
  double solow_polasky;
  double hausdorff;
  uintptr_t population_size;
} DvTraceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *dv_last_error_message(void);

/**
 * Euclidean distance matrix of `n` points of dimension `dim`, given
 * row-major in `coords` (`n * dim` values).
 *
 * # Safety
 * `coords` must point to `n * dim` readable doubles; `out` must be writable.
 */
enum DvStatus dv_matrix_from_points(const double *coords,
                                    uintptr_t n,
                                    uintptr_t dim,
                                    struct DvMatrix **out_matrix);

/**
 * Distance matrix from `n * n` row-major entries, checked against the
 * similarity-space axioms.
 *
 * # Safety
 * `entries` must point to `n * n` readable doubles; `out` must be writable.
 */
enum DvStatus dv_matrix_from_rows(const double *entries, uintptr_t n, struct DvMatrix **out_matrix);

/**
 * Loads a header-less CSV distance matrix.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DvStatus dv_matrix_load_csv(const char *path, struct DvMatrix **out_matrix);

/**
 * # Safety
 * `matrix` must be NULL or a handle from this library not yet freed.
 */
void dv_matrix_free(struct DvMatrix *matrix);

/**
 * # Safety
 * `matrix` must be a live handle; `out_len` must be writable.
 */
enum DvStatus dv_matrix_len(const struct DvMatrix *matrix, uintptr_t *out_len);

/**
 * Indicator value of a subset. Pass `subset = NULL, len = 0` for all points.
 *
 * # Safety
 * `subset` must point to `len` readable indices (or be NULL with `len = 0`).
 */
enum DvStatus dv_evaluate(const struct DvMatrix *matrix,
                          struct DvIndicator ind,
                          const uintptr_t *subset,
                          uintptr_t len,
                          double *out_value);

/**
 * Contribution of every member of the subset, written to `out_values` in
 * subset order (`dv_matrix_len` values when `subset` is NULL). Undefined
 * entries are NaN.
 *
 * # Safety
 * `out_values` must have room for one double per member.
 */
enum DvStatus dv_contributions(const struct DvMatrix *matrix,
                               struct DvIndicator ind,
                               const uintptr_t *subset,
                               uintptr_t len,
                               double *out_values);

/**
 * Best `k`-subset by exhaustive search (`greedy = 0`) or greedily.
 * Writes `k` sorted indices to `out_subset`.
 *
 * # Safety
 * `out_subset` must have room for `k` indices.
 */
enum DvStatus dv_select(const struct DvMatrix *matrix,
                        struct DvIndicator ind,
                        uintptr_t k,
                        int greedy,
                        uintptr_t *out_subset,
                        double *out_value);

/**
 * # Safety
 * `out_graph` must be writable.
 */
enum DvStatus dv_graph_new(uintptr_t n, struct DvGraph **out_graph);

/**
 * # Safety
 * `graph` must be a live handle.
 */
enum DvStatus dv_graph_add_edge(struct DvGraph *graph, uintptr_t i, uintptr_t j);

/**
 * # Safety
 * `graph` must be NULL or a handle from this library not yet freed.
 */
void dv_graph_free(struct DvGraph *graph);

/**
 * Decides whether `graph` has a `k`-clique by minimizing Riesz `s`-energy
 * over its graph metric. On a clique, its vertices are written to
 * `out_clique` (room for `k` indices; may be NULL).
 *
 * # Safety
 * Pointers must be valid as described.
 */
enum DvStatus dv_clique_via_energy(const struct DvGraph *graph,
                                   uintptr_t k,
                                   double s,
                                   int *out_has_clique,
                                   uintptr_t *out_clique,
                                   double *out_min_energy);

/**
 * Hausdorff distance between two planar point sets given as `x, y` pairs.
 *
 * # Safety
 * `a` and `b` must point to `2 * na` and `2 * nb` doubles.
 */
enum DvStatus dv_hausdorff(const double *a,
                           uintptr_t na,
                           const double *b,
                           uintptr_t nb,
                           double *out_value);

/**
 * Two-sided two-sample t-test, pooled variance unless `welch != 0`.
 *
 * # Safety
 * `a` and `b` must point to `na` and `nb` doubles.
 */
enum DvStatus dv_ttest(const double *a,
                       uintptr_t na,
                       const double *b,
                       uintptr_t nb,
                       int welch,
                       double *out_t,
                       double *out_p);

/**
 * Runs NOAH on the case-study objectives. `config` is `key = value` text
 * (NULL for defaults). With `with_hausdorff != 0` the trace records the
 * distance to the case-study efficient set.
 *
 * # Safety
 * `config` must be NULL or NUL-terminated; `out_trace` must be writable.
 */
enum DvStatus dv_noah_run(const char *config, int with_hausdorff, struct DvTrace **out_trace);

/**
 * # Safety
 * `trace` must be NULL or a handle from this library not yet freed.
 */
void dv_trace_free(struct DvTrace *trace);

/**
 * Number of records in the trace.
 *
 * # Safety
 * `trace` must be a live handle.
 */
enum DvStatus dv_trace_len(const struct DvTrace *trace, uintptr_t *out_len);

/**
 * # Safety
 * `trace` must be a live handle; `out_record` must be writable.
 */
enum DvStatus dv_trace_record(const struct DvTrace *trace,
                              uintptr_t index,
                              struct DvTraceRecord *out_record);

/**
 * Copies the population of record `index` as `x, y` pairs into `out_xy`,
 * which must hold `2 * capacity` doubles; fails if `capacity` is too small.
 *
 * # Safety
 * `out_xy` must point to `2 * capacity` writable doubles.
 */
enum DvStatus dv_trace_population(const struct DvTrace *trace,
                                  uintptr_t index,
                                  double *out_xy,
                                  uintptr_t capacity,
                                  uintptr_t *out_written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIVERSITY_H */

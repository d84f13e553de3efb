#ifndef SEMGRAPH_H
#define SEMGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SemgraphStatus {
  SEMGRAPH_STATUS_OK = 0,
  SEMGRAPH_STATUS_NULL_ARGUMENT = 1,
  SEMGRAPH_STATUS_INVALID_ARGUMENT = 2,
  SEMGRAPH_STATUS_IO = 3,
  SEMGRAPH_STATUS_FORMAT = 4,
  SEMGRAPH_STATUS_DOMAIN = 5,
  SEMGRAPH_STATUS_BUSY = 6,
  SEMGRAPH_STATUS_BUFFER_TOO_SMALL = 7,
  SEMGRAPH_STATUS_RUNTIME = 8,
  SEMGRAPH_STATUS_PANIC = 9,
} SemgraphStatus;

/**
 * An opened graph plus the engine configuration used for every call.
 */
typedef struct SemgraphSession SemgraphSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to fit) and returns the full message length in
 * bytes, excluding the terminator. `buf` may be null to query the length.
 *
 * # Safety
 * `buf` is null or valid for `len` writes.
 */
size_t semgraph_last_error(char *buf, size_t len);

/**
 * Converts a text edge list into graph files at `out`.
 *
 * # Safety
 * `edgelist` and `out` are NUL-terminated strings.
 */
enum SemgraphStatus semgraph_ingest(const char *edgelist, const char *out, bool directed);

/**
 * Opens the graph at `path`. `cache_bytes` 0 selects the default cache
 * size; `workers` 0 selects one worker.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is valid for one write.
 */
enum SemgraphStatus semgraph_open(const char *path,
                                  size_t cache_bytes,
                                  size_t workers,
                                  struct SemgraphSession **out);

/**
 * Releases a session; null is ignored.
 *
 * # Safety
 * `s` is null or a session from [`semgraph_open`] not used afterwards.
 */
void semgraph_close(struct SemgraphSession *s);

/**
 * # Safety
 * `s` is a live session; the out pointers are valid for one write each.
 */
enum SemgraphStatus semgraph_counts(const struct SemgraphSession *s,
                                    uint64_t *vertices,
                                    uint64_t *edges,
                                    bool *directed);

/**
 * Writes the edge-list id of every vertex into `out[0..n]`.
 *
 * # Safety
 * `s` is a live session; `out` is valid for `len` writes.
 */
enum SemgraphStatus semgraph_original_ids(const struct SemgraphSession *s,
                                          uint64_t *out,
                                          size_t len);

/**
 * PageRank into `ranks[0..n]`. `variant` is "push" or "pull" (null: push);
 * non-positive `damping`, `threshold` or `max_iterations` keep defaults.
 *
 * # Safety
 * `s` is a live session; `variant` is null or NUL-terminated; `ranks` is
 * valid for `len` writes; `iterations` is null or valid for one write.
 */
enum SemgraphStatus semgraph_pagerank(const struct SemgraphSession *s,
                                      const char *variant,
                                      double damping,
                                      double threshold,
                                      size_t max_iterations,
                                      double *ranks,
                                      size_t len,
                                      size_t *iterations);

/**
 * Diameter lower bound from `num_bfs` search rounds of `batch` sources.
 * `variant` is "uni" or "multi" (null: multi).
 *
 * # Safety
 * `s` is a live session; `variant` is null or NUL-terminated; `estimate`
 * is valid for one write.
 */
enum SemgraphStatus semgraph_diameter(const struct SemgraphSession *s,
                                      const char *variant,
                                      size_t num_bfs,
                                      size_t batch,
                                      uint32_t *estimate);

/**
 * Betweenness from the given sources (null `sources`: every vertex) into
 * `out[0..n]`. `variant` is "uni", "multi_sync" or "multi_async" (null:
 * multi_async).
 *
 * # Safety
 * `s` is a live session; `variant` is null or NUL-terminated; `sources` is
 * null or valid for `num_sources` reads; `out` is valid for `len` writes.
 */
enum SemgraphStatus semgraph_betweenness(const struct SemgraphSession *s,
                                         const char *variant,
                                         const uint64_t *sources,
                                         size_t num_sources,
                                         double *out,
                                         size_t len);

/**
 * Core numbers into `out[0..n]`. `variant` is "naive", "pruning",
 * "hybrid" or "optimized" (null: optimized).
 *
 * # Safety
 * `s` is a live session; `variant` is null or NUL-terminated; `out` is
 * valid for `len` writes.
 */
enum SemgraphStatus semgraph_coreness(const struct SemgraphSession *s,
                                      const char *variant,
                                      uint32_t *out,
                                      size_t len);

/**
 * Triangle total, plus per-vertex counts into `per_vertex[0..n]` unless it
 * is null. `variant` is "scan", "binsearch", "hash" or "revhash" (null:
 * revhash).
 *
 * # Safety
 * `s` is a live session; `variant` is null or NUL-terminated;
 * `per_vertex` is null or valid for `len` writes; `total` is valid for one
 * write.
 */
enum SemgraphStatus semgraph_triangles(const struct SemgraphSession *s,
                                       const char *variant,
                                       uint64_t *per_vertex,
                                       size_t len,
                                       uint64_t *total);

/**
 * Community labels (smallest member id) into `communities[0..n]` and the
 * modularity after each level into `q[0..levels]`, with `levels` set to the
 * number of levels recorded. `max_levels` 0 keeps the default.
 *
 * # Safety
 * `s` is a live session; `communities` is valid for `len` writes; `q` is
 * valid for `q_len` writes; `levels` is valid for one write.
 */
enum SemgraphStatus semgraph_louvain(const struct SemgraphSession *s,
                                     size_t max_levels,
                                     uint64_t *communities,
                                     size_t len,
                                     double *q,
                                     size_t q_len,
                                     size_t *levels);

/**
 * Modularity of the partition `assignment[0..n]`.
 *
 * # Safety
 * `s` is a live session; `assignment` is valid for `len` reads; `q` is
 * valid for one write.
 */
enum SemgraphStatus semgraph_modularity(const struct SemgraphSession *s,
                                        const uint64_t *assignment,
                                        size_t len,
                                        double *q);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMGRAPH_H */

#ifndef PIPKIT_H
#define PIPKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum PipStatus {
  PIP_STATUS_OK = 0,
  PIP_STATUS_NULL_POINTER = 1,
  /**
   * A documented precondition was violated (unsorted runs, duplicate keys,
   * a queried pair that is not an edge).
   */
  PIP_STATUS_CONTRACT = 2,
  /**
   * Malformed input data.
   */
  PIP_STATUS_INPUT = 3,
  /**
   * An internal structure was found corrupted.
   */
  PIP_STATUS_INVARIANT = 4,
  PIP_STATUS_IO = 5,
  PIP_STATUS_PANIC = 6,
} PipStatus;

/**
 * Opaque oracle handle. Owns a copy of the graph array.
 */
typedef struct PipOracle PipOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Merges the sorted runs `data[0..left_len]` and `data[left_len..len]` in
 * place. Keys must be distinct.
 *
 * # Safety
 * `data` must point to `len` writable words.
 */
enum PipStatus pip_merge(uint64_t *data, size_t len, size_t left_len, uint64_t seed);

/**
 * Shuffles `data` uniformly using in-place buffers. Values must be
 * distinct.
 *
 * # Safety
 * `data` must point to `len` writable words.
 */
enum PipStatus pip_shuffle(uint64_t *data, size_t len, uint64_t seed);

/**
 * Shuffles `data` with a heap workspace. The result equals the sequential
 * Knuth shuffle driven by the same seed.
 *
 * # Safety
 * `data` must point to `len` writable words.
 */
enum PipStatus pip_parallel_shuffle(uint64_t *data, size_t len, uint64_t seed);

/**
 * Builds an oracle from a CSR array of `len` words. The array is copied.
 * On success `*out` receives a handle to release with [`pip_oracle_free`].
 *
 * # Safety
 * `words` must point to `len` readable words and `out` must be writable.
 */
enum PipStatus pip_oracle_build(const uint64_t *words,
                                size_t len,
                                uint64_t seed,
                                struct PipOracle **out);

/**
 * Vertex count of the oracle's graph, or 0 for a null handle.
 *
 * # Safety
 * `oracle` must be null or a live handle.
 */
size_t pip_oracle_vertex_count(const struct PipOracle *oracle);

/**
 * Writes whether edge `(u, v)` belongs to the minimum spanning forest.
 *
 * # Safety
 * `oracle` must be a live handle and `out` writable.
 */
enum PipStatus pip_oracle_msf_query(const struct PipOracle *oracle, size_t u, size_t v, bool *out);

/**
 * Writes the component label of `v`. Two vertices are connected exactly
 * when their labels are equal.
 *
 * # Safety
 * `oracle` must be a live handle and `out` writable.
 */
enum PipStatus pip_oracle_connectivity(const struct PipOracle *oracle, size_t v, size_t *out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `oracle` must be null or a handle not freed before.
 */
void pip_oracle_free(struct PipOracle *oracle);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `cap > 0`). Returns the full message length.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null when `cap` is 0.
 */
size_t pip_last_error(char *buf, size_t cap);

/**
 * Static description of a status code; unknown codes get a generic text.
 */
const char *pip_status_str(int32_t status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIPKIT_H */

#ifndef ISUMAP_H
#define ISUMAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IsumapStatus {
  ISUMAP_STATUS_OK = 0,
  ISUMAP_STATUS_NULL_POINTER = 1,
  ISUMAP_STATUS_INVALID_ARGUMENT = 2,
  ISUMAP_STATUS_PARSE = 3,
  ISUMAP_STATUS_DISCONNECTED = 4,
  ISUMAP_STATUS_NON_FINITE = 5,
  ISUMAP_STATUS_IO = 6,
  ISUMAP_STATUS_BUFFER_TOO_SMALL = 7,
  ISUMAP_STATUS_PANIC = 8,
} IsumapStatus;

/**
 * Pipeline settings.
 */
typedef struct IsumapConfig IsumapConfig;

/**
 * The result of a pipeline run or of embedding a matrix.
 */
typedef struct IsumapEmbedding IsumapEmbedding;

/**
 * A square dissimilarity matrix.
 */
typedef struct IsumapMatrix IsumapMatrix;

/**
 * A parsed m-scheme.
 */
typedef struct IsumapScheme IsumapScheme;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 */
const char *isumap_last_error_message(void);

/**
 * Parses a scheme code (`min`, `ext`, `mv:<a>`, `mw:<c>`, `mpi:<c>`, `h`).
 *
 * # Safety
 * `code` must be a NUL-terminated string and `out` writable.
 */
enum IsumapStatus isumap_scheme_parse(const char *code, struct IsumapScheme **out);

/**
 * `M(a, b)`; arguments must lie in `[0, +inf]`.
 *
 * # Safety
 * `scheme` must come from [`isumap_scheme_parse`]; `out` must be writable.
 */
enum IsumapStatus isumap_scheme_apply(const struct IsumapScheme *scheme,
                                      double a,
                                      double b,
                                      double *out);

/**
 * Folds `len` values; fails on an empty input.
 *
 * # Safety
 * `values` must point to `len` readable doubles.
 */
enum IsumapStatus isumap_scheme_fold(const struct IsumapScheme *scheme,
                                     const double *values,
                                     size_t len,
                                     double *out);

/**
 * # Safety
 * `scheme` must be null or come from [`isumap_scheme_parse`], and not be
 * used afterwards.
 */
void isumap_scheme_free(struct IsumapScheme *scheme);

/**
 * Copies an `n x n` row-major matrix (`+inf` allowed off the diagonal).
 *
 * # Safety
 * `entries` must point to `n * n` readable doubles.
 */
enum IsumapStatus isumap_matrix_new(size_t n, const double *entries, struct IsumapMatrix **out);

/**
 * # Safety
 * `matrix` must come from this library; `out` must be writable.
 */
enum IsumapStatus isumap_matrix_size(const struct IsumapMatrix *matrix, size_t *out);

/**
 * # Safety
 * `matrix` must come from this library; `out` must be writable.
 */
enum IsumapStatus isumap_matrix_get(const struct IsumapMatrix *matrix,
                                    size_t i,
                                    size_t j,
                                    double *out);

/**
 * Shortest-path completion of a symmetric matrix into a new handle.
 *
 * # Safety
 * `matrix` must come from this library; `out` must be writable.
 */
enum IsumapStatus isumap_matrix_metric_completion(const struct IsumapMatrix *matrix,
                                                  struct IsumapMatrix **out);

/**
 * Number of triangle violations (capped at 100) plus asymmetric pairs.
 *
 * # Safety
 * `matrix` must come from this library; `out` must be writable.
 */
enum IsumapStatus isumap_matrix_violation_count(const struct IsumapMatrix *matrix, size_t *out);

/**
 * # Safety
 * `matrix` must be null or come from this library, and not be used
 * afterwards.
 */
void isumap_matrix_free(struct IsumapMatrix *matrix);

/**
 * Default pipeline settings.
 *
 * # Safety
 * `out` must be writable.
 */
enum IsumapStatus isumap_config_default(struct IsumapConfig **out);

/**
 * Settings from TOML text in the same format as the CLI config file.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum IsumapStatus isumap_config_from_toml(const char *toml, struct IsumapConfig **out);

/**
 * # Safety
 * `config` must come from this library and `scheme` be a NUL-terminated
 * scheme code.
 */
enum IsumapStatus isumap_config_set_scheme(struct IsumapConfig *config, const char *scheme);

/**
 * # Safety
 * `config` must come from this library.
 */
enum IsumapStatus isumap_config_set_k(struct IsumapConfig *config, size_t k);

/**
 * # Safety
 * `config` must be null or come from this library, and not be used
 * afterwards.
 */
void isumap_config_free(struct IsumapConfig *config);

/**
 * Runs the pipeline on the configured generated dataset, in memory.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum IsumapStatus isumap_run(const struct IsumapConfig *config, struct IsumapEmbedding **out);

/**
 * Runs the pipeline on `n` points of dimension `dim`, row-major.
 *
 * # Safety
 * `coords` must point to `n * dim` readable doubles.
 */
enum IsumapStatus isumap_run_points(const struct IsumapConfig *config,
                                    const double *coords,
                                    size_t n,
                                    size_t dim,
                                    struct IsumapEmbedding **out);

/**
 * Classical MDS followed by SMACOF on a finite symmetric matrix.
 *
 * # Safety
 * `matrix` must come from this library; `out` must be writable.
 */
enum IsumapStatus isumap_embed_matrix(const struct IsumapMatrix *matrix,
                                      uint64_t seed,
                                      struct IsumapEmbedding **out);

/**
 * Number of embedded points.
 *
 * # Safety
 * `embedding` must come from this library; `out` must be writable.
 */
enum IsumapStatus isumap_embedding_len(const struct IsumapEmbedding *embedding, size_t *out);

/**
 * Copies `x0, y0, x1, y1, ...` into `xy`, which holds `capacity` doubles.
 *
 * # Safety
 * `xy` must point to `capacity` writable doubles.
 */
enum IsumapStatus isumap_embedding_coords(const struct IsumapEmbedding *embedding,
                                          double *xy,
                                          size_t capacity);

/**
 * Copies the input index of every embedded point into `indices`.
 *
 * # Safety
 * `indices` must point to `capacity` writable `size_t`s.
 */
enum IsumapStatus isumap_embedding_indices(const struct IsumapEmbedding *embedding,
                                           size_t *indices,
                                           size_t capacity);

/**
 * Final raw stress and the number of SMACOF iterations.
 *
 * # Safety
 * `embedding` must come from this library; out pointers must be writable.
 */
enum IsumapStatus isumap_embedding_stress(const struct IsumapEmbedding *embedding,
                                          double *stress,
                                          size_t *iterations);

/**
 * The run report as JSON (empty for [`isumap_embed_matrix`] results).
 * Owned by the embedding; null for a null handle.
 *
 * # Safety
 * `embedding` must be null or come from this library.
 */
const char *isumap_embedding_report_json(const struct IsumapEmbedding *embedding);

/**
 * # Safety
 * `embedding` must be null or come from this library, and not be used
 * afterwards.
 */
void isumap_embedding_free(struct IsumapEmbedding *embedding);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISUMAP_H */

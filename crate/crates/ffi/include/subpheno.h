#ifndef SUBPHENO_H
#define SUBPHENO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_POINTER = 1,
  SP_STATUS_INVALID_ARGUMENT = 2,
  SP_STATUS_CONFIG = 3,
  SP_STATUS_IO = 4,
  SP_STATUS_PARSE = 5,
  SP_STATUS_FAILED = 6,
  SP_STATUS_PANIC = 7,
} SpStatus;

/**
 * Results of a completed pipeline run.
 */
typedef struct SpBundle SpBundle;

/**
 * Run configuration under construction.
 */
typedef struct SpConfig SpConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *sp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sp_version(void);

/**
 * Creates a configuration from a preset name (`desk` or `paper-scale`).
 */
enum SpStatus sp_config_from_preset(const char *preset, struct SpConfig **out);

/**
 * Creates a configuration from JSON text; `preset` may be null.
 */
enum SpStatus sp_config_from_json(const char *json, const char *preset, struct SpConfig **out);

enum SpStatus sp_config_set_seed(struct SpConfig *cfg, uint64_t seed);

enum SpStatus sp_config_set_threads(struct SpConfig *cfg, size_t threads);

/**
 * Sets the admissions CSV, measurements CSV and output directory.
 */
enum SpStatus sp_config_set_paths(struct SpConfig *cfg,
                                  const char *admissions,
                                  const char *measurements,
                                  const char *output_dir);

/**
 * Turns the t-SNE embedding and SVG plots on or off.
 */
enum SpStatus sp_config_set_outputs(struct SpConfig *cfg, bool embedding, bool plots);

enum SpStatus sp_config_validate(const struct SpConfig *cfg);

void sp_config_free(struct SpConfig *cfg);

/**
 * Writes a synthetic cohort for `preset` with `seed` into `dir`.
 */
enum SpStatus sp_synth_write(const char *preset, uint64_t seed, const char *dir);

/**
 * Runs the full pipeline and writes the report bundle.
 */
enum SpStatus sp_run(const struct SpConfig *cfg, struct SpBundle **out);

/**
 * Number of subgroups chosen.
 */
enum SpStatus sp_bundle_k(const struct SpBundle *b, size_t *out);

/**
 * Number of delirium cases clustered.
 */
enum SpStatus sp_bundle_n_cases(const struct SpBundle *b, size_t *out);

/**
 * Aligned k-means versus hierarchical kappa, and whether it fell below the threshold.
 */
enum SpStatus sp_bundle_kappa(const struct SpBundle *b, double *kappa, bool *unstable);

/**
 * Held-out re-assignment accuracy and macro-F.
 */
enum SpStatus sp_bundle_validation(const struct SpBundle *b, double *accuracy, double *macro_f);

/**
 * Copies the case subgroup labels into `out` (capacity `len`). `written`
 * receives the number of cases even when `len` is too small.
 */
enum SpStatus sp_bundle_labels(const struct SpBundle *b, size_t *out, size_t len, size_t *written);

void sp_bundle_free(struct SpBundle *b);

/**
 * k-means on a row-major `n × d` matrix. `metric` is 0 for euclidean, 1 for cosine.
 * Writes `n` labels and the final inertia.
 */
enum SpStatus sp_kmeans(const double *data,
                        size_t n,
                        size_t d,
                        size_t k,
                        int metric_code,
                        uint64_t seed,
                        size_t *labels,
                        double *inertia);

/**
 * Mean silhouette width of `labels` (values in `0..k`) over a row-major `n × d` matrix.
 */
enum SpStatus sp_silhouette(const double *data,
                            size_t n,
                            size_t d,
                            const size_t *labels,
                            size_t k,
                            int metric_code,
                            double *out);

/**
 * Adjusted Rand index between two labelings of length `n`.
 */
enum SpStatus sp_adjusted_rand_index(const size_t *a, const size_t *b, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBPHENO_H */

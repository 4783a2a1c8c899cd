#ifndef AGGSENT_H
#define AGGSENT_H

/* Generated by cbindgen from aggsent-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum AggsentStatus {
  AGGSENT_STATUS_OK = 0,
  AGGSENT_STATUS_INVALID_ARGUMENT = 1,
  AGGSENT_STATUS_PARSE_ERROR = 2,
  AGGSENT_STATUS_ESTIMATION_ERROR = 3,
  AGGSENT_STATUS_IO_ERROR = 4,
  AGGSENT_STATUS_BUFFER_TOO_SMALL = 5,
  AGGSENT_STATUS_PANIC = 6,
} AggsentStatus;

// A fitted quantification model: vocabulary, training profiles, and the
// per-subset conditional matrices. Immutable after `aggsent_model_fit`.
typedef struct AggsentModel AggsentModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message for the calling thread into `buf` (NUL
// terminated, truncated to `cap`). Returns the full message length.
//
// # Safety
// `buf` must point to at least `cap` writable bytes, or be null (query).
uintptr_t aggsent_last_error(char *buf, uintptr_t cap);

// Fit a model from a JSONL stream file and a `doc_id,category[,coder_id]`
// labels CSV (ids refer into the stream). On success writes a handle to
// `out_model`; free it with `aggsent_model_free`.
//
// # Safety
// `stream_path` and `labels_path` must be NUL-terminated strings and
// `out_model` a valid pointer.
enum AggsentStatus aggsent_model_fit(const char *stream_path,
                                     const char *labels_path,
                                     uint64_t seed,
                                     uintptr_t n_subsets,
                                     uintptr_t words_per_subset,
                                     struct AggsentModel **out_model);

// Release a model handle. Null is a no-op.
//
// # Safety
// `model` must be a handle from `aggsent_model_fit`, passed at most once.
void aggsent_model_free(struct AggsentModel *model);

// Number of categories the model estimates.
//
// # Safety
// `model` must be a live handle from `aggsent_model_fit`.
uintptr_t aggsent_model_n_categories(const struct AggsentModel *model);

// Static name of category `index` ("positive", "negative", ...), or null.
//
// # Safety
// `model` must be a live handle from `aggsent_model_fit`.
const char *aggsent_model_category_name(const struct AggsentModel *model, uintptr_t index);

// Quantify a JSONL stream file. Writes one estimate per category (model
// category order) into `out_estimates`; `cap` is its capacity.
//
// # Safety
// `model` must be a live handle; `out_estimates` must point to at least
// `cap` doubles.
enum AggsentStatus aggsent_model_quantify_file(const struct AggsentModel *model,
                                               const char *stream_path,
                                               double *out_estimates,
                                               uintptr_t cap);

// Solve `min ||y - Pm b||^2` on the probability simplex from raw buffers.
// `pm` is row-major with `n_rows x n_categories` entries and column sums 1;
// `out_beta` receives `n_categories` weights summing to 1.
//
// # Safety
// `y`, `pm`, `out_beta` must point to buffers of the stated sizes.
enum AggsentStatus aggsent_quantify_simplex(const double *y,
                                            uintptr_t n_rows,
                                            const double *pm,
                                            uintptr_t n_categories,
                                            double *out_beta);

// Positive share of the opinionated mass: `positive / (positive + negative)`.
//
// # Safety
// `out_ratio` must be a valid pointer.
enum AggsentStatus aggsent_sentiment_ratio(double positive, double negative, double *out_ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGGSENT_H */

#ifndef CTXPRUNE_H
#define CTXPRUNE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CtxpruneStatus {
  CTXPRUNE_STATUS_OK = 0,
  CTXPRUNE_STATUS_NULL_ARGUMENT = 1,
  CTXPRUNE_STATUS_INVALID_UTF8 = 2,
  CTXPRUNE_STATUS_INVALID_INPUT = 3,
  CTXPRUNE_STATUS_CONFIG_INVALID = 4,
  CTXPRUNE_STATUS_BACKEND_ERROR = 5,
  CTXPRUNE_STATUS_INTERNAL = 6,
} CtxpruneStatus;

/**
 * Settings plus a ready scorer backend.
 */
typedef struct CtxpruneCompressor CtxpruneCompressor;

/**
 * A finished compression.
 */
typedef struct CtxpruneResult CtxpruneResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a compressor from TOML settings (`[compression]` and `[backend]`
 * sections). A null `config_toml` selects the defaults with the mock backend.
 *
 * # Safety
 * `config_toml` must be null or a NUL-terminated string; `out` must be a valid
 * pointer to writable storage.
 */
enum CtxpruneStatus ctxprune_compressor_new(const char *config_toml,
                                            struct CtxpruneCompressor **out);

/**
 * Sets the token budget. Zero is rejected.
 *
 * # Safety
 * `compressor` must come from [`ctxprune_compressor_new`] and not be freed.
 */
enum CtxpruneStatus ctxprune_compressor_set_budget(struct CtxpruneCompressor *compressor,
                                                   size_t budget);

/**
 * # Safety
 * `compressor` must be null or come from [`ctxprune_compressor_new`], and not
 * be used afterwards.
 */
void ctxprune_compressor_free(struct CtxpruneCompressor *compressor);

/**
 * Compresses `source` for `instruction`.
 *
 * # Safety
 * `compressor` must be live; `source` and `instruction` NUL-terminated; `out`
 * writable.
 */
enum CtxpruneStatus ctxprune_compress(const struct CtxpruneCompressor *compressor,
                                      const char *source,
                                      const char *instruction,
                                      struct CtxpruneResult **out);

/**
 * Compressed text, valid until the result is freed. Null for a null result.
 *
 * # Safety
 * `result` must be null or live.
 */
const char *ctxprune_result_text(const struct CtxpruneResult *result);

/**
 * Result metadata as JSON, valid until the result is freed.
 *
 * # Safety
 * `result` must be null or live.
 */
const char *ctxprune_result_metadata_json(const struct CtxpruneResult *result);

/**
 * Original over emitted tokens; NaN when nothing was emitted or `result` is null.
 *
 * # Safety
 * `result` must be null or live.
 */
double ctxprune_result_ratio(const struct CtxpruneResult *result);

/**
 * # Safety
 * `result` must be null or live.
 */
size_t ctxprune_result_original_tokens(const struct CtxpruneResult *result);

/**
 * # Safety
 * `result` must be null or live.
 */
size_t ctxprune_result_retained_tokens(const struct CtxpruneResult *result);

/**
 * # Safety
 * `result` must be null or live.
 */
size_t ctxprune_result_emitted_tokens(const struct CtxpruneResult *result);

/**
 * Number of warnings recorded for the run.
 *
 * # Safety
 * `result` must be null or live.
 */
size_t ctxprune_result_warning_count(const struct CtxpruneResult *result);

/**
 * # Safety
 * `result` must be null or come from [`ctxprune_compress`], and not be used afterwards.
 */
void ctxprune_result_free(struct CtxpruneResult *result);

/**
 * Edit similarity in `[0, 100]`.
 *
 * # Safety
 * Both strings NUL-terminated; `out` writable.
 */
enum CtxpruneStatus ctxprune_edit_similarity(const char *hypothesis,
                                             const char *reference,
                                             double *out);

/**
 * Exact match (0 or 1) after trailing-whitespace normalization.
 *
 * # Safety
 * Both strings NUL-terminated; `out` writable.
 */
enum CtxpruneStatus ctxprune_exact_match(const char *hypothesis, const char *reference, int *out);

/**
 * Message for the last failure on this thread, or null. Valid until the next
 * call into this library on the same thread.
 */
const char *ctxprune_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ctxprune_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXPRUNE_H */

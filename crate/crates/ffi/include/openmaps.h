#ifndef OPENMAPS_H
#define OPENMAPS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The first three match the command-line exit codes.
 */
typedef enum OmStatus {
  /**
   * A verdict was reached, negative verdicts included.
   */
  OM_OK = 0,
  /**
   * A bounded search ended without a verdict.
   */
  OM_INCONCLUSIVE = 1,
  /**
   * The inputs were rejected; `*out` holds the error document.
   */
  OM_INPUT_ERROR = 2,
  /**
   * A required pointer was null; `*out` is left null.
   */
  OM_NULL_ARGUMENT = 3,
  /**
   * A string argument is not UTF-8; `*out` is left null.
   */
  OM_INVALID_UTF8 = 4,
  /**
   * The library failed internally; `*out` holds a message when possible.
   */
  OM_INTERNAL_ERROR = 5,
} OmStatus;

/**
 * A parsed model file of any kind.
 */
typedef struct OmModel OmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *om_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void om_string_free(char *s);

/**
 * Parses a model file's text. On success `*model` owns a new handle and
 * `*error` is null; on `OmInputError` `*error` holds the error document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `model` and `error` writable.
 */
enum OmStatus om_model_parse(const char *json, struct OmModel **model, char **error);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`om_model_parse`] and not have been freed.
 */
void om_model_free(struct OmModel *model);

/**
 * The model's kind (`"lts"`, `"prob"`, ...) as a new string, or null.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
char *om_model_kind(const struct OmModel *model);

/**
 * The model re-serialized as a model file.
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
enum OmStatus om_model_to_json(const struct OmModel *model, char **out);

/**
 * Kind and size summary of a model.
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
enum OmStatus om_validate(const struct OmModel *model, char **out);

/**
 * Bisimilarity of two models of the same kind. `epsilon`, `policy` and
 * `words` may be null; `depth` 0 selects the default bound.
 *
 * # Safety
 * Handles must be live or null where allowed; strings NUL-terminated.
 */
enum OmStatus om_bisim(const struct OmModel *a,
                       const struct OmModel *b,
                       const char *epsilon,
                       size_t depth,
                       const char *policy,
                       const struct OmModel *words,
                       char **out);

/**
 * Checks that the morphism model `f` maps `a` into `b`. `seed` drives the
 * sampler for hybrid systems; `depth` 0 selects the default; `words` may be null.
 *
 * # Safety
 * Handles must be live or null where allowed.
 */
enum OmStatus om_morphism_check(const struct OmModel *f,
                                const struct OmModel *a,
                                const struct OmModel *b,
                                uint64_t seed,
                                size_t depth,
                                const struct OmModel *words,
                                char **out);

/**
 * Openness of `f: a -> b` by both decision routes. `max_len` 0 selects the default.
 *
 * # Safety
 * Handles must be live.
 */
enum OmStatus om_open_check(const struct OmModel *f,
                            const struct OmModel *a,
                            const struct OmModel *b,
                            size_t max_len,
                            char **out);

/**
 * Coreflection laws of `instance` (`"prob"`, `"timed"` or `"hybrid"`) on a samples model.
 *
 * # Safety
 * `instance` NUL-terminated; `samples` a live handle.
 */
enum OmStatus om_laws_check(const char *instance,
                            const struct OmModel *samples,
                            size_t depth,
                            char **out);

/**
 * Re-validates a witness (or a whole checker output carrying one) against
 * the `n_inputs` models it was produced from, in command-line order.
 *
 * # Safety
 * `witness_json` NUL-terminated; `inputs` points to `n_inputs` live handles.
 */
enum OmStatus om_check_witness(const char *witness_json,
                               const struct OmModel *const *inputs,
                               size_t n_inputs,
                               char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPENMAPS_H */

#ifndef LUCELAB_H
#define LUCELAB_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum LucelabStatus {
  LUCELAB_STATUS_OK = 0,
  LUCELAB_STATUS_NULL_POINTER = 1,
  LUCELAB_STATUS_INVALID_ARGUMENT = 2,
  LUCELAB_STATUS_UNKNOWN_OPTION = 3,
  LUCELAB_STATUS_OPTION_NOT_PRESENTED = 4,
  LUCELAB_STATUS_INFEASIBLE_CONSTRAINT = 5,
  LUCELAB_STATUS_SAMPLER_DIVERGENCE = 6,
  LUCELAB_STATUS_INVALID_CONFIG = 7,
  LUCELAB_STATUS_BUFFER_TOO_SMALL = 8,
  LUCELAB_STATUS_PANIC = 99,
} LucelabStatus;

typedef enum LucelabModelKind {
  LUCELAB_MODEL_KIND_DIRICHLET_LUCE = 0,
  LUCELAB_MODEL_KIND_DIRICHLET_MULTINOMIAL = 1,
} LucelabModelKind;

typedef enum LucelabPolicy {
  LUCELAB_POLICY_THOMPSON = 0,
  LUCELAB_POLICY_GREEDY = 1,
} LucelabPolicy;

/**
 * Opaque posterior handle with its own random stream.
 */
typedef struct LucelabModel LucelabModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call into the library.
 */
const char *lucelab_last_error_message(void);

/**
 * Creates a model with prior `Dirichlet(alpha[0..k])`, seeded with `seed`.
 *
 * # Safety
 * `alpha` must point to `k` readable doubles and `out` to a writable handle slot.
 */
enum LucelabStatus lucelab_model_new(enum LucelabModelKind kind,
                                     const double *alpha,
                                     uintptr_t k,
                                     uint64_t seed,
                                     struct LucelabModel **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` must come from [`lucelab_model_new`] and not have been freed.
 */
void lucelab_model_free(struct LucelabModel *model);

/**
 * Number of options the model covers, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
uintptr_t lucelab_model_k(const struct LucelabModel *model);

/**
 * Records that `chosen` was picked from the options in `presented[0..len]`.
 *
 * # Safety
 * `model` must be a live handle and `presented` must point to `len` indices.
 */
enum LucelabStatus lucelab_model_observe(struct LucelabModel *model,
                                         const uintptr_t *presented,
                                         uintptr_t len,
                                         uintptr_t chosen);

/**
 * Writes one posterior draw of the preference vector into `out[0..out_len]`.
 *
 * # Safety
 * `model` must be a live handle and `out` must point to `out_len` writable doubles.
 */
enum LucelabStatus lucelab_model_sample(struct LucelabModel *model, double *out, uintptr_t out_len);

/**
 * Writes the posterior mean into `out[0..out_len]`. For the Luce model this
 * is a Monte Carlo estimate with the default budget.
 *
 * # Safety
 * `model` must be a live handle and `out` must point to `out_len` writable doubles.
 */
enum LucelabStatus lucelab_model_posterior_mean(struct LucelabModel *model,
                                                double *out,
                                                uintptr_t out_len);

/**
 * Picks the next `l` options to show without constraints and writes them,
 * sorted, into `out[0..l]`.
 *
 * # Safety
 * `model` must be a live handle and `out` must point to `l` writable indices.
 */
enum LucelabStatus lucelab_model_select(struct LucelabModel *model,
                                        enum LucelabPolicy policy,
                                        uintptr_t l,
                                        uintptr_t *out);

/**
 * Luce probability that `chosen` is picked from `presented` under `theta`.
 *
 * # Safety
 * `theta` must point to `k` doubles, `presented` to `len` indices and
 * `out` to one writable double.
 */
enum LucelabStatus lucelab_luce_choice_probability(const double *theta,
                                                   uintptr_t k,
                                                   const uintptr_t *presented,
                                                   uintptr_t len,
                                                   uintptr_t chosen,
                                                   double *out);

/**
 * Runs a full experiment from a JSON configuration and returns the summary
 * as JSON in `*out_json`. Unset fields take their defaults. `workers == 0`
 * uses every core. Free the result with [`lucelab_string_free`].
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out_json` a writable slot.
 */
enum LucelabStatus lucelab_run_experiment_json(const char *config_json,
                                               uintptr_t workers,
                                               char **out_json);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lucelab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LUCELAB_H */

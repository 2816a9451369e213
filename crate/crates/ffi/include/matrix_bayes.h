#ifndef MATRIX_BAYES_H
#define MATRIX_BAYES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_POINTER = 1,
  MB_STATUS_INVALID_ARGUMENT = 2,
  MB_STATUS_CAPACITY = 3,
  MB_STATUS_PARSE = 4,
  MB_STATUS_INVALID_UTF8 = 5,
  MB_STATUS_PANIC = 6,
} MbStatus;

/**
 * Opaque embedding map.
 */
typedef struct MbEmbeddingMap MbEmbeddingMap;

/**
 * Opaque finite Dirichlet mixture.
 */
typedef struct MbMixture MbMixture;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *mb_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void mb_string_free(char *s);

/**
 * Posterior mean `(alpha + x) / (alpha + beta + n)`.
 *
 * # Safety
 * `out_mean` must be a valid pointer.
 */
MbStatus mb_beta_posterior_mean(double alpha,
                                double beta,
                                uint64_t x,
                                uint64_t n,
                                double *out_mean);

/**
 * `1 / (1 + n / (alpha + beta))`.
 *
 * # Safety
 * `out_ratio` must be a valid pointer.
 */
MbStatus mb_adaptation_ratio(double alpha, double beta, uint64_t n, double *out_ratio);

/**
 * Posterior predictive after adding `counts` to `alphas`; writes `m` values.
 *
 * # Safety
 * `alphas`, `counts` and `out_probs` must each point to `m` elements.
 */
MbStatus mb_dirichlet_predictive(const double *alphas,
                                 const uint64_t *counts,
                                 size_t m,
                                 double *out_probs);

/**
 * `ln P(T* | T)` for distinct token indices under `Dir(alphas)`.
 *
 * # Safety
 * Array arguments must point to the stated number of elements.
 */
MbStatus mb_ln_generative_probability(const double *alphas,
                                      size_t m,
                                      const size_t *tstar,
                                      size_t tstar_len,
                                      const size_t *t,
                                      size_t t_len,
                                      double *out_ln_p);

/**
 * Shannon entropy in nats.
 *
 * # Safety
 * `p` must point to `len` elements.
 */
MbStatus mb_entropy(const double *p, size_t len, double *out_h);

/**
 * `-sum p_i ln q_i`; fails when `q` is zero where `p` is not.
 *
 * # Safety
 * `p` and `q` must point to `len` elements.
 */
MbStatus mb_cross_entropy(const double *p, const double *q, size_t len, double *out_ce);

/**
 * Loads a mixture from its JSON document.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out_mix` a valid pointer.
 */
MbStatus mb_mixture_from_json(const char *json, MbMixture **out_mix);

/**
 * Grid (`samples == 0`) or Monte Carlo approximation of a built-in density
 * such as `"beta-product(2,1)"`. The grid respects `MATRIX_BAYES_CAP`.
 *
 * # Safety
 * `density` must be a nul-terminated string; `out_mix` a valid pointer.
 */
MbStatus mb_mixture_approximate(const char *density,
                                uint32_t n,
                                size_t m,
                                size_t samples,
                                uint64_t seed,
                                MbMixture **out_mix);

/**
 * Number of components.
 *
 * # Safety
 * `mix` must be a live handle or null.
 */
MbStatus mb_mixture_len(const MbMixture *mix, size_t *out_len);

/**
 * Vocabulary size `m`.
 *
 * # Safety
 * `mix` must be a live handle or null.
 */
MbStatus mb_mixture_dim(const MbMixture *mix, size_t *out_dim);

/**
 * Updates the mixture in place on token `j`; writes the marginal
 * probability of `j` before the update.
 *
 * # Safety
 * `mix` must be a live handle; `out_marginal` may be null.
 */
MbStatus mb_mixture_observe(MbMixture *mix, size_t j, double *out_marginal);

/**
 * Predictive next-token distribution; writes `m` values.
 *
 * # Safety
 * `out_probs` must point to `m` elements.
 */
MbStatus mb_mixture_predictive(const MbMixture *mix, double *out_probs, size_t m);

/**
 * Mixture density at a simplex point.
 *
 * # Safety
 * `p` must point to `m` elements.
 */
MbStatus mb_mixture_density(const MbMixture *mix, const double *p, size_t m, double *out_density);

/**
 * Serializes the mixture; free the result with [`mb_string_free`].
 *
 * # Safety
 * `out_json` must be a valid pointer.
 */
MbStatus mb_mixture_to_json(const MbMixture *mix, char **out_json);

/**
 * # Safety
 * `mix` must come from this library and not be freed twice. Null is ignored.
 */
void mb_mixture_free(MbMixture *mix);

/**
 * Loads an embedding map from JSON.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out_map` a valid pointer.
 */
MbStatus mb_embedding_map_from_json(const char *json, MbEmbeddingMap **out_map);

/**
 * Embedding dimension `r` and vocabulary size `m`.
 *
 * # Safety
 * Out pointers must be valid.
 */
MbStatus mb_embedding_map_dims(const MbEmbeddingMap *map, size_t *out_r, size_t *out_m);

/**
 * Inverse-distance interpolation from the `k` nearest anchors.
 *
 * # Safety
 * `query` must point to `r` elements and `out_probs` to `m`.
 */
MbStatus mb_embedding_map_interpolate(const MbEmbeddingMap *map,
                                      const double *query,
                                      size_t r,
                                      size_t k,
                                      double *out_probs,
                                      size_t m);

/**
 * # Safety
 * `map` must come from this library and not be freed twice. Null is ignored.
 */
void mb_embedding_map_free(MbEmbeddingMap *map);

/**
 * Renders a JSON-lines trace as a standalone HTML page.
 *
 * # Safety
 * `jsonl` must be a nul-terminated string; `out_html` a valid pointer.
 */
MbStatus mb_trace_render_html(const char *jsonl, char **out_html);

/**
 * Runs the in-context decomposition and returns the full report as JSON.
 * `query` may be null to use the corpus' own query. `scorer` is 0 for the
 * generative score and 1 for the embedding score.
 *
 * # Safety
 * String arguments must be nul-terminated; `out_json` a valid pointer.
 */
MbStatus mb_icl_run(const char *corpus_json,
                    const char *query,
                    double alpha,
                    uint32_t scorer,
                    char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATRIX_BAYES_H */

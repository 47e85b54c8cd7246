#ifndef AFS_H
#define AFS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AfsStatus {
  AFS_STATUS_OK = 0,
  AFS_STATUS_NULL_POINTER = 1,
  AFS_STATUS_INVALID_UTF8 = 2,
  AFS_STATUS_INVALID_INPUT = 3,
  AFS_STATUS_CONFIG = 4,
  AFS_STATUS_UNDEFINED = 5,
  AFS_STATUS_MISSING_RESOURCE = 6,
  AFS_STATUS_LAYOUT_MISMATCH = 7,
  AFS_STATUS_IO = 8,
  AFS_STATUS_PARSE = 9,
  AFS_STATUS_INTERNAL = 10,
  AFS_STATUS_PANIC = 11,
} AfsStatus;

typedef enum AfsLexicalizedSide {
  AFS_LEXICALIZED_SIDE_GOVERNOR = 0,
  AFS_LEXICALIZED_SIDE_BOTH = 1,
} AfsLexicalizedSide;

typedef enum AfsOverlapNorm {
  AFS_OVERLAP_NORM_SUM_OF_LENGTHS = 0,
  AFS_OVERLAP_NORM_MEAN_OF_LENGTHS = 1,
} AfsOverlapNorm;

/**
 * Word embedding table.
 */
typedef struct AfsEmbeddings AfsEmbeddings;

/**
 * Word category lexicon.
 */
typedef struct AfsLexicon AfsLexicon;

/**
 * Fitted regression model.
 */
typedef struct AfsModel AfsModel;

typedef struct AfsTTestResult {
  double t;
  size_t df;
  /**
   * Two-sided p-value.
   */
  double p;
} AfsTTestResult;

typedef struct AfsRougeScore {
  double precision;
  double recall;
  double f;
} AfsRougeScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *afs_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next afs call on the same thread.
 */
const char *afs_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *afs_status_name(enum AfsStatus status);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void afs_string_free(char *s);

/**
 * # Safety
 * `a` and `b` must point to `n` readable doubles; `out` must be writable.
 */
enum AfsStatus afs_pearson_r(const double *a, const double *b, size_t n, double *out);

/**
 * # Safety
 * `a` and `b` must point to `n` readable doubles; `out` must be writable.
 */
enum AfsStatus afs_rmse(const double *a, const double *b, size_t n, double *out);

/**
 * Student t cumulative distribution function.
 *
 * # Safety
 * `out` must be writable.
 */
enum AfsStatus afs_t_cdf(double t, double df, double *out);

/**
 * Paired t-test of `a` against `b`.
 *
 * # Safety
 * `a` and `b` must point to `n` readable doubles; `out` must be writable.
 */
enum AfsStatus afs_paired_ttest(const double *a,
                                const double *b,
                                size_t n,
                                struct AfsTTestResult *out);

/**
 * ROUGE-N of `candidate` against `reference`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_rouge_n(const char *reference,
                           const char *candidate,
                           size_t n,
                           double beta,
                           struct AfsRougeScore *out);

/**
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_rouge_l(const char *reference,
                           const char *candidate,
                           double beta,
                           struct AfsRougeScore *out);

/**
 * ROUGE-W with weighting function `k^w`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_rouge_w(const char *reference,
                           const char *candidate,
                           double w,
                           double beta,
                           struct AfsRougeScore *out);

/**
 * ROUGE-S* (skip-bigrams, unlimited gap).
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_rouge_s(const char *reference,
                           const char *candidate,
                           double beta,
                           struct AfsRougeScore *out);

/**
 * ROUGE-SU* (skip-bigrams plus unigrams).
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_rouge_su(const char *reference,
                            const char *candidate,
                            double beta,
                            struct AfsRougeScore *out);

/**
 * Cosine of n-gram count vectors for orders 1..=max_order.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_ngram_cosine(const char *a, const char *b, size_t max_order, double *out);

/**
 * Parses a lexicon in `%`-header dictionary format.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_lexicon_parse(const char *text, struct AfsLexicon **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_lexicon_load(const char *path, struct AfsLexicon **out);

/**
 * Newline-separated category names of `word`, including ancestors, in
 * category id order. Free the result with `afs_string_free`.
 *
 * # Safety
 * `lexicon` must be a live handle; `word` NUL-terminated; `out` writable.
 */
enum AfsStatus afs_lexicon_categories(const struct AfsLexicon *lexicon,
                                      const char *word,
                                      char **out);

/**
 * # Safety
 * `lexicon` must be NULL or a handle not yet freed.
 */
void afs_lexicon_free(struct AfsLexicon *lexicon);

/**
 * Generalized dependency overlap of two single-sentence CoNLL-U strings.
 *
 * # Safety
 * `lexicon` must be a live handle; strings NUL-terminated; `out` writable.
 */
enum AfsStatus afs_dep_overlap(const struct AfsLexicon *lexicon,
                               const char *conllu_a,
                               const char *conllu_b,
                               enum AfsLexicalizedSide side,
                               enum AfsOverlapNorm norm,
                               double *out);

/**
 * Loads a word2vec text or binary file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_embeddings_load(const char *path, struct AfsEmbeddings **out);

/**
 * # Safety
 * `table` must be a live handle; `dim` and `vocab_size` writable or NULL.
 */
enum AfsStatus afs_embeddings_shape(const struct AfsEmbeddings *table,
                                    size_t *dim,
                                    size_t *vocab_size);

/**
 * Copies the vector of `word` into `out` (length `len`, which must equal
 * the table dimension). `found` is set to false for unknown words, in
 * which case `out` is left untouched.
 *
 * # Safety
 * `table` must be a live handle; `word` NUL-terminated; `out` must hold
 * `len` floats; `found` writable.
 */
enum AfsStatus afs_embeddings_lookup(const struct AfsEmbeddings *table,
                                     const char *word,
                                     float *out,
                                     size_t len,
                                     bool *found);

/**
 * # Safety
 * `table` must be NULL or a handle not yet freed.
 */
void afs_embeddings_free(struct AfsEmbeddings *table);

/**
 * Standardizes the row-major `n_rows x n_cols` matrix `x` and fits ridge
 * regression.
 *
 * # Safety
 * `x` must hold `n_rows * n_cols` doubles, `y` `n_rows`; `out` writable.
 */
enum AfsStatus afs_model_fit_ridge(const double *x,
                                   size_t n_rows,
                                   size_t n_cols,
                                   const double *y,
                                   double alpha,
                                   struct AfsModel **out);

/**
 * Standardizes `x` and fits epsilon-SVR with an RBF kernel.
 *
 * # Safety
 * `x` must hold `n_rows * n_cols` doubles, `y` `n_rows`; `out` writable.
 */
enum AfsStatus afs_model_fit_svr(const double *x,
                                 size_t n_rows,
                                 size_t n_cols,
                                 const double *y,
                                 double c,
                                 double gamma,
                                 double epsilon,
                                 struct AfsModel **out);

/**
 * Reads a model saved by `afs train` or [`afs_model_to_json`].
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_model_from_json(const char *json, struct AfsModel **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum AfsStatus afs_model_load(const char *path, struct AfsModel **out);

/**
 * Serializes the model; free the result with `afs_string_free`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum AfsStatus afs_model_to_json(const struct AfsModel *model, char **out);

/**
 * Number of input columns the model expects.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum AfsStatus afs_model_n_features(const struct AfsModel *model, size_t *out);

/**
 * Predicts the row-major `n_rows x n_cols` matrix `x` into `out`.
 *
 * # Safety
 * `model` must be a live handle; `x` must hold `n_rows * n_cols` doubles
 * and `out` room for `n_rows`.
 */
enum AfsStatus afs_model_predict(const struct AfsModel *model,
                                 const double *x,
                                 size_t n_rows,
                                 size_t n_cols,
                                 double *out);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void afs_model_free(struct AfsModel *model);

/**
 * Runs the `afs` command line with `argv[0..argc]` and returns its exit
 * code (0 success, 1 input error, 2 internal failure).
 *
 * # Safety
 * `argv` must point to `argc` NUL-terminated strings.
 */
int afs_cli_run(int argc, const char *const *argv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AFS_H */

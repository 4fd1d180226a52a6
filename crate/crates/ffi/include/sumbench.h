/* C ABI for the sumbench Java method summarization benchmark toolkit. */

#ifndef SUMBENCH_H
#define SUMBENCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Anything other than `Ok` leaves a message retrievable via
// `sb_last_error_message`.
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_ARGUMENT = 1,
  SB_STATUS_INVALID_UTF8 = 2,
  SB_STATUS_IO = 3,
  SB_STATUS_PARSE = 4,
  SB_STATUS_NOT_FOUND = 5,
  SB_STATUS_COMPUTE = 6,
} SbStatus;

// Mined method corpus (opaque).
typedef struct SbCorpus SbCorpus;

// BM25 exemplar index over a corpus (opaque).
typedef struct SbIndex SbIndex;

// N-gram metric scores for one (candidate, reference) pair.
typedef struct SbMetricScores {
  double bleu;
  double bleu_dc;
  double meteor;
  double rouge_prec;
  double rouge_rec;
} SbMetricScores;

// Statistic and p-value of a one-sided test.
typedef struct SbTestResult {
  double statistic;
  double p_value;
} SbTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread; do not free.
const char *sb_last_error_message(void);

// Crate version as a static string; do not free.
const char *sb_version(void);

// Release a string returned by this library. NULL is a no-op.
//
// # Safety
// `ptr` must have been returned by a `sb_*` function of this library and
// not freed before.
void sb_string_free(char *ptr);

// Mine a Java source tree into a corpus handle.
//
// # Safety
// `root` must be a valid NUL-terminated string; `out` must be a valid
// pointer to receive the handle.
enum SbStatus sb_corpus_extract(const char *root, bool require_javadoc, struct SbCorpus **out);

// Load a corpus from a JSONL file written by the CLI.
//
// # Safety
// `path` must be a valid NUL-terminated string; `out` must be valid.
enum SbStatus sb_corpus_load(const char *path, struct SbCorpus **out);

// Number of methods in the corpus; 0 for NULL.
//
// # Safety
// `corpus` must be NULL or a live handle from this library.
size_t sb_corpus_len(const struct SbCorpus *corpus);

// JSON array of the method ids in corpus order (free with `sb_string_free`).
//
// # Safety
// `corpus` must be a live handle; `out` must be valid.
enum SbStatus sb_corpus_method_ids(const struct SbCorpus *corpus, char **out);

// Release a corpus handle. NULL is a no-op.
//
// # Safety
// `corpus` must have come from this library and not be freed twice.
void sb_corpus_free(struct SbCorpus *corpus);

// Build a BM25 index over the corpus (the training partition).
//
// # Safety
// `corpus` must be a live handle; `out` must be valid.
enum SbStatus sb_index_build(const struct SbCorpus *corpus, struct SbIndex **out);

// Top-k most similar indexed methods for a code snippet, as a JSON array
// of {"method_id", "score", "rank"} (free with `sb_string_free`).
// `exclude_id` may be NULL.
//
// # Safety
// `index` must be a live handle; `query_code` a valid string; `out` valid.
enum SbStatus sb_index_top_k(const struct SbIndex *index,
                             const char *query_code,
                             size_t k,
                             const char *exclude_id,
                             char **out);

// Release an index handle. NULL is a no-op.
//
// # Safety
// `index` must have come from this library and not be freed twice.
void sb_index_free(struct SbIndex *index);

// Render a prompt for the method with `method_id` in `corpus`. `strategy`
// is one of simple, wordrestrict, summarizeexplanation, ignoreexception,
// asap; the asap strategy requires `index`. Free the result with
// `sb_string_free`.
//
// # Safety
// All handle/string arguments must be valid (index may be NULL for
// non-asap strategies); `out` must be valid.
enum SbStatus sb_render_prompt(const struct SbCorpus *corpus,
                               const struct SbIndex *index,
                               const char *method_id,
                               const char *strategy,
                               bool masked,
                               char **out);

// Score a candidate summary against a reference on the n-gram metrics.
//
// # Safety
// `candidate` and `reference` must be valid strings; `out` must be valid.
enum SbStatus sb_score_pair(const char *candidate,
                            const char *reference,
                            struct SbMetricScores *out);

// Extract the semantic-facts block (identifiers + def-use) for a method.
// Free the result with `sb_string_free`.
//
// # Safety
// `corpus` must be a live handle; `method_id` a valid string; `out` valid.
enum SbStatus sb_semantic_facts(const struct SbCorpus *corpus, const char *method_id, char **out);

// One-sided Welch t-test (alternative: mean of `a` is higher).
//
// # Safety
// `a` and `b` must point to `a_len`/`b_len` readable doubles; `out` valid.
enum SbStatus sb_t_test_one_sided(const double *a,
                                  size_t a_len,
                                  const double *b,
                                  size_t b_len,
                                  struct SbTestResult *out);

// One-sided two-sample KS test (alternative: `a` stochastically greater).
//
// # Safety
// `a` and `b` must point to `a_len`/`b_len` readable doubles; `out` valid.
enum SbStatus sb_ks_test_one_sided(const double *a,
                                   size_t a_len,
                                   const double *b,
                                   size_t b_len,
                                   struct SbTestResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUMBENCH_H */

#ifndef RANDCLOSED_H
#define RANDCLOSED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_UTF8 = 2,
  // A parameter is outside its domain.
  RC_STATUS_DOMAIN = 3,
  // A code contains a symbol outside its alphabet.
  RC_STATUS_INVALID_SYMBOL = 4,
  // A code ran out before the requested depth.
  RC_STATUS_CODE_TOO_SHORT = 5,
  // A tree has a dead end above its depth.
  RC_STATUS_DEAD_END = 6,
  // A level exceeded the node budget.
  RC_STATUS_BUDGET_EXCEEDED = 7,
  // The process died out before the horizon.
  RC_STATUS_EXTINCT = 8,
  // Too few survivors for a conditional estimate.
  RC_STATUS_INSUFFICIENT_SURVIVORS = 9,
  // Any other library error.
  RC_STATUS_FAILED = 10,
  // A panic was caught at the boundary.
  RC_STATUS_PANIC = 11,
} RcStatus;

// Decoded finite-depth prefix tree.
typedef struct RcTree RcTree;

// Proportion estimate with its 99% interval.
typedef struct RcEstimate {
  double value;
  double ci_low;
  double ci_high;
  double exact;
  double tolerance;
  uint64_t successes;
  uint64_t trials;
  bool passed;
} RcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into the library on this thread.
const char *rc_last_error_message(void);

// Release a string returned by the library.
//
// # Safety
// `s` must be null or a pointer returned by this library and not yet freed.
void rc_string_free(char *s);

// `1 - 2^(-1/n)`.
//
// # Safety
// `out` must be valid for writes.
enum RcStatus rc_threshold(uint32_t n, double *out);

// `1 - (1 - p)^n`.
//
// # Safety
// `out` must be valid for writes.
enum RcStatus rc_f_n(double p, uint32_t n, double *out);

// `1 - (1 - p)^(1/n)`.
//
// # Safety
// `out` must be valid for writes.
enum RcStatus rc_f_n_inverse(double p, uint32_t n, double *out);

// Whether sets with parameters `<p,q>` and `<r,s>` can intersect.
bool rc_pair_nonempty_possible(double p, double q, double r, double s);

// Probability that the intersection of independent `<p,q>` and `<r,s>`
// random closed sets is empty.
//
// # Safety
// `out` must be valid for writes.
enum RcStatus rc_pair_emptiness(double p, double q, double r, double s, double *out);

// Probability that `n` independent `<p,p>` random closed sets have empty
// intersection.
//
// # Safety
// `out` must be valid for writes.
enum RcStatus rc_nfold_emptiness(double p, uint32_t n, double *out);

// Degree of intersectability of the symmetric family at `p` in `(0, 1/2]`.
//
// # Safety
// `out` must be valid for writes.
enum RcStatus rc_degree(double p, uint64_t *out);

// `-log2(1 - p)`.
//
// # Safety
// `out` must be valid for writes.
enum RcStatus rc_dim_lower_bound(double p, double *out);

// Survival probability of the branching process with offspring law
// `law[0..4] = (a0, a1, a2, a3)`.
//
// # Safety
// `law` must point to four readable doubles; `out` must be valid for writes.
enum RcStatus rc_survival_limit(const double *law, double *out);

// Decode a trit code to depth `depth`. `consumed` may be null.
//
// # Safety
// `code` must be a nul-terminated string; `tree` must be valid for writes.
enum RcStatus rc_decode_trit(const char *code,
                             size_t depth,
                             struct RcTree **tree,
                             size_t *consumed);

// Decode a quad code to depth `depth`. `extinct` may be null.
//
// # Safety
// `code` must be a nul-terminated string; `tree` must be valid for writes.
enum RcStatus rc_decode_quad(const char *code, size_t depth, struct RcTree **tree, bool *extinct);

// Release a tree.
//
// # Safety
// `tree` must be null or a handle from this library not yet freed.
void rc_tree_free(struct RcTree *tree);

// Depth of a tree, or 0 for null.
//
// # Safety
// `tree` must be null or a live handle.
size_t rc_tree_depth(const struct RcTree *tree);

// Number of nodes of a tree, or 0 for null.
//
// # Safety
// `tree` must be null or a live handle.
size_t rc_tree_node_count(const struct RcTree *tree);

// Whether `node` (a string over {0,1}) is in the tree.
//
// # Safety
// `tree` must be null or a live handle; `node` null or nul-terminated.
bool rc_tree_contains(const struct RcTree *tree, const char *node);

// Tree as JSON `{"depth": d, "nodes": [...]}`. Free with [`rc_string_free`].
//
// # Safety
// `tree` must be a live handle; `json` must be valid for writes.
enum RcStatus rc_tree_to_json(const struct RcTree *tree, char **json);

// Trit code of a dead-end-free tree. Free with [`rc_string_free`].
//
// # Safety
// `tree` must be a live handle; `code` must be valid for writes.
enum RcStatus rc_encode_trit(const struct RcTree *tree, char **code);

// Quad code of the intersection of `count >= 2` trit-coded trees cut at
// `depth`. `empty` may be null. Free the code with [`rc_string_free`].
//
// # Safety
// `codes` must point to `count` nul-terminated strings; `code` must be
// valid for writes.
enum RcStatus rc_intersect_codes(const char *const *codes,
                                 size_t count,
                                 size_t depth,
                                 char **code,
                                 bool *empty);

// Monte Carlo estimate of survival to `depth` for offspring law
// `law[0..4]`, checked against the recurrence.
//
// # Safety
// `law` must point to four readable doubles; `out` must be valid for writes.
enum RcStatus rc_estimate_survival(const double *law,
                                   size_t depth,
                                   uint64_t trials,
                                   uint64_t seed,
                                   struct RcEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDCLOSED_H */

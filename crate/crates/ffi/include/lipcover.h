#ifndef LIPCOVER_H
#define LIPCOVER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LcStatus {
  LC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  LC_STATUS_NULL_POINTER = 1,
  /**
   * An argument was malformed or out of range.
   */
  LC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A condition handed in is not a member of the poset.
   */
  LC_STATUS_INVALID_CONDITION = 3,
  /**
   * The two conditions do not meet the amalgamation hypotheses.
   */
  LC_STATUS_PRECONDITIONS = 4,
  /**
   * A bit index or count does not fit the fixed-width result.
   */
  LC_STATUS_OVERFLOW = 5,
  /**
   * A string argument was not valid UTF-8, or JSON did not parse.
   */
  LC_STATUS_PARSE = 6,
  /**
   * The library panicked; this is a bug.
   */
  LC_STATUS_INTERNAL = 7,
} LcStatus;

/**
 * Opaque forcing condition.
 */
typedef struct LcCondition LcCondition;

/**
 * Opaque store of Cantor-point definitions.
 */
typedef struct LcPointStore LcPointStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 */
const char *lc_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void lc_string_free(char *s);

/**
 * Number of ordered pairs of `{0..size-1}` not covered by the identity and
 * the first `fn_count` ordinal functions and their inverses.
 *
 * # Safety
 * `out_uncovered` must be null or valid for writes.
 */
enum LcStatus lc_sierpinski_uncovered(uint64_t size, uint64_t fn_count, uint64_t *out_uncovered);

/**
 * `log2` of the number of 1-Lipschitz self-maps of the depth-`n` tree.
 *
 * # Safety
 * `out_log2` must be null or valid for writes.
 */
enum LcStatus lc_lipschitz_count_log2(uint32_t n, uint64_t *out_log2);

struct LcPointStore *lc_point_store_new(void);

/**
 * # Safety
 * `store` must be null or a handle from [`lc_point_store_new`], not yet freed.
 */
void lc_point_store_free(struct LcPointStore *store);

/**
 * Adds the point `prefix` followed by `tail` forever. `prefix` is a string
 * of `'0'`/`'1'` characters.
 *
 * # Safety
 * `store` must be a live handle, `prefix` a NUL-terminated string, and
 * `out_id` null or valid for writes.
 */
enum LcStatus lc_point_store_add_base(struct LcPointStore *store,
                                      const char *prefix,
                                      bool tail,
                                      size_t *out_id);

/**
 * Adds the diagonal extension of the `len` points in `ids`.
 *
 * # Safety
 * `store` must be a live handle, `ids` valid for `len` reads, and `out_id`
 * null or valid for writes.
 */
enum LcStatus lc_point_store_diagonal_extend(struct LcPointStore *store,
                                             const size_t *ids,
                                             size_t len,
                                             size_t *out_id);

/**
 * Bit `index` of point `id`.
 *
 * # Safety
 * `store` must be a live handle and `out_bit` null or valid for writes.
 */
enum LcStatus lc_point_store_eval(struct LcPointStore *store,
                                  size_t id,
                                  uint64_t index,
                                  bool *out_bit);

/**
 * The first `depth` bits of `f_n(x_id)` as a `'0'`/`'1'` string; `n = 0`
 * gives the prefix of the point itself.
 *
 * # Safety
 * `store` must be a live handle and `out_bits` null or valid for writes.
 */
enum LcStatus lc_point_store_apply(struct LcPointStore *store,
                                   uint32_t n,
                                   size_t id,
                                   size_t depth,
                                   char **out_bits);

/**
 * The trivial condition: depth 0, index set `{0}`, no labels.
 */
struct LcCondition *lc_condition_trivial(void);

/**
 * # Safety
 * `c` must be null or a handle returned by this library, not yet freed.
 */
void lc_condition_free(struct LcCondition *c);

/**
 * Parses a condition from its JSON form. The maps must be 1-Lipschitz, but
 * membership in the poset is not checked; see [`lc_condition_violations`].
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_c` null or valid for writes.
 */
enum LcStatus lc_condition_from_json(const char *json, struct LcCondition **out_c);

/**
 * # Safety
 * `c` must be a live handle and `out_json` null or valid for writes.
 */
enum LcStatus lc_condition_to_json(const struct LcCondition *c, char **out_json);

/**
 * Number of failed membership clauses; 0 means the condition is valid.
 *
 * # Safety
 * `c` must be a live handle and `out_count` null or valid for writes.
 */
enum LcStatus lc_condition_violations(const struct LcCondition *c, size_t *out_count);

/**
 * Depth `n` of the condition.
 *
 * # Safety
 * `c` must be a live handle and `out_depth` null or valid for writes.
 */
enum LcStatus lc_condition_depth(const struct LcCondition *c, size_t *out_depth);

/**
 * Whether `q` extends `p`.
 *
 * # Safety
 * `p`, `q` must be live handles and `out_leq` null or valid for writes.
 */
enum LcStatus lc_condition_leq(const struct LcCondition *p,
                               const struct LcCondition *q,
                               bool *out_leq);

/**
 * An extension of `c` with depth at least `k` and `k` in its index set.
 *
 * # Safety
 * `c` must be a live handle and `out_c` null or valid for writes.
 */
enum LcStatus lc_condition_extend_index(const struct LcCondition *c,
                                        uint64_t k,
                                        struct LcCondition **out_c);

/**
 * An extension of `c` whose label set contains `label`.
 *
 * # Safety
 * `c` must be a live handle and `out_c` null or valid for writes.
 */
enum LcStatus lc_condition_extend_ordinal(const struct LcCondition *c,
                                          uint64_t label,
                                          struct LcCondition **out_c);

/**
 * A common extension of two isomorphic, separated conditions.
 *
 * # Safety
 * `p`, `q` must be live handles and `out_c` null or valid for writes.
 */
enum LcStatus lc_condition_amalgamate(const struct LcCondition *p,
                                      const struct LcCondition *q,
                                      struct LcCondition **out_c);

/**
 * The final condition of the seeded generic run meeting the index sets
 * `0..k` and every label in `labels[0..len]`.
 *
 * # Safety
 * `labels` must be valid for `len` reads and `out_c` null or valid for writes.
 */
enum LcStatus lc_generic_run(uint64_t k,
                             const uint64_t *labels,
                             size_t len,
                             uint64_t seed,
                             struct LcCondition **out_c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIPCOVER_H */

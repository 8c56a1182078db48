#ifndef PILAB_H
#define PILAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  PILAB_STATUS_OK = 0,
  PILAB_STATUS_INVALID_ARGUMENT = 1,
  PILAB_STATUS_PARSE_ERROR = 2,
  PILAB_STATUS_INVALID_INSTANCE = 3,
  PILAB_STATUS_NOT_WELL_DEFINED = 4,
  PILAB_STATUS_SINGULAR_SYSTEM = 5,
  PILAB_STATUS_CAP_EXCEEDED = 6,
  PILAB_STATUS_UNKNOWN_NAME = 7,
  PILAB_STATUS_IO_ERROR = 8,
  PILAB_STATUS_PANIC = 9,
} PilabStatus;

/**
 * Improvement-selection strategy for [`pilab_solve`].
 */
typedef enum {
  PILAB_STRATEGY_GREEDY = 0,
  PILAB_STRATEGY_RANDOM = 1,
  PILAB_STRATEGY_SEQUENTIAL_LOWEST = 2,
  PILAB_STRATEGY_SEQUENTIAL_HIGHEST = 3,
  PILAB_STRATEGY_SEQUENTIAL_RANDOM = 4,
} PilabStrategy;

/**
 * Opaque instance handle.
 */
typedef struct PilabMdp PilabMdp;

/**
 * Opaque iteration-trace handle.
 */
typedef struct PilabTrace PilabTrace;

/**
 * Options for [`pilab_solve`].
 */
typedef struct {
  PilabStrategy strategy;
  /**
   * Seed for randomized strategies; ignored by the deterministic ones.
   */
  uint64_t seed;
  /**
   * Run in double precision instead of exact rationals.
   */
  bool use_float;
  /**
   * Iteration cap; 0 selects the default (twice the policy count,
   * at most 10^7).
   */
  uint64_t max_iter;
} PilabSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying library as a static string; do not free.
 */
const char *pilab_version(void);

/**
 * Message of the most recent failure on this thread, or null when the last
 * call succeeded. The caller owns the returned string.
 */
char *pilab_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by a pilab function, or null.
 */
void pilab_string_free(char *s);

/**
 * Parses an instance from its text form.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
PilabStatus pilab_mdp_parse(const char *text, PilabMdp **out);

/**
 * Creates a built-in instance (`M2`, `M2c`).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string and `out` a valid pointer.
 */
PilabStatus pilab_mdp_builtin(const char *name, PilabMdp **out);

/**
 * Generates a seeded random instance. Rewards are `num/reward_den` with
 * `num` uniform in `reward_lo..=reward_hi`; `density` is the fraction of
 * nonzero transitions per row.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
PilabStatus pilab_mdp_generate(size_t n,
                               size_t k,
                               uint64_t seed,
                               int64_t gamma_num,
                               int64_t gamma_den,
                               double density,
                               int64_t reward_lo,
                               int64_t reward_hi,
                               int64_t reward_den,
                               PilabMdp **out);

/**
 * Releases an instance handle.
 *
 * # Safety
 * `mdp` must be a pointer from a pilab constructor, not yet freed, or null.
 */
void pilab_mdp_free(PilabMdp *mdp);

/**
 * Number of states; 0 for a null handle.
 *
 * # Safety
 * `mdp` must be a live handle or null.
 */
size_t pilab_mdp_num_states(const PilabMdp *mdp);

/**
 * Number of actions; 0 for a null handle.
 *
 * # Safety
 * `mdp` must be a live handle or null.
 */
size_t pilab_mdp_num_actions(const PilabMdp *mdp);

/**
 * Checks the instance invariants. Returns `Ok` for a valid instance;
 * otherwise `InvalidInstance`, with the violation list in the last error.
 *
 * # Safety
 * `mdp` must be a live handle.
 */
PilabStatus pilab_mdp_validate(const PilabMdp *mdp);

/**
 * Serializes the instance to its text form.
 *
 * # Safety
 * `mdp` must be a live handle and `out` a valid pointer.
 */
PilabStatus pilab_mdp_to_text(const PilabMdp *mdp, char **out);

/**
 * Runs policy iteration. `start_actions` may be null for the all-zeros
 * start policy; otherwise it must hold `start_len == n` action indices.
 *
 * # Safety
 * `mdp` must be a live handle, `options` and `out` valid pointers, and
 * `start_actions` either null or valid for `start_len` reads.
 */
PilabStatus pilab_solve(const PilabMdp *mdp,
                        const PilabSolveOptions *options,
                        const uint32_t *start_actions,
                        size_t start_len,
                        PilabTrace **out);

/**
 * Releases a trace handle.
 *
 * # Safety
 * `trace` must be a pointer from [`pilab_solve`], not yet freed, or null.
 */
void pilab_trace_free(PilabTrace *trace);

/**
 * Number of improvement iterations performed; 0 for a null handle.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
uint64_t pilab_trace_iterations(const PilabTrace *trace);

/**
 * Whether the run stopped at an optimal policy (rather than the cap).
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
bool pilab_trace_terminated(const PilabTrace *trace);

/**
 * Total number of discarded empty random draws.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
uint64_t pilab_trace_resamples(const PilabTrace *trace);

/**
 * Final action at `state`, or -1 when out of range.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
int64_t pilab_trace_final_action(const PilabTrace *trace, size_t state);

/**
 * Final value at `state` as a double (exact values are converted), or NaN
 * when out of range.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
double pilab_trace_final_value(const PilabTrace *trace, size_t state);

/**
 * Final value at `state` in text form (`num/den` in exact mode).
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
PilabStatus pilab_trace_final_value_text(const PilabTrace *trace, size_t state, char **out);

/**
 * The full line-oriented trace log.
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
PilabStatus pilab_trace_to_text(const PilabTrace *trace, char **out);

/**
 * Evaluates the closed-form iteration bound for a strategy name
 * (`greedy`, `greedy-multi`, `random`, `random-multi`, `sequential`,
 * `trivial`).
 *
 * # Safety
 * `strategy` must be a valid NUL-terminated string and `out_value` a valid
 * pointer.
 */
PilabStatus pilab_eval_bound(size_t n, size_t k, const char *strategy, double *out_value);

/**
 * Runs the structural checks (`checks` is a comma list or `all`) on one
 * instance, including its greedy and seeded random traces. Writes the
 * report text to `out_report` and the violation count to
 * `out_violations`; the status is `Ok` whenever the checks ran, even if
 * violations were found.
 *
 * # Safety
 * `mdp` must be a live handle, `checks` a valid NUL-terminated string, and
 * `out_report` / `out_violations` valid pointers.
 */
PilabStatus pilab_verify_instance(const PilabMdp *mdp,
                                  const char *checks,
                                  uint64_t cap,
                                  uint64_t trace_seed,
                                  char **out_report,
                                  uint64_t *out_violations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PILAB_H */

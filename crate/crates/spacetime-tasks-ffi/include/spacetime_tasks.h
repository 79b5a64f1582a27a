#ifndef SPACETIME_TASKS_H
#define SPACETIME_TASKS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StqStatus {
  STQ_STATUS_OK = 0,
  STQ_STATUS_NULL_POINTER = 1,
  STQ_STATUS_INVALID_UTF8 = 2,
  STQ_STATUS_PARSE = 3,
  STQ_STATUS_INVALID_TASK = 4,
  STQ_STATUS_REFUSED = 5,
  STQ_STATUS_UNSUPPORTED = 6,
  STQ_STATUS_AUDIT = 7,
  STQ_STATUS_FAILED = 8,
  STQ_STATUS_PANIC = 9,
} StqStatus;

/**
 * Opaque parsed task.
 */
typedef struct StqTask StqTask;

/**
 * Metrics of one simulated scenario. Absent values are NaN.
 */
typedef struct StqOutcome {
  double fidelity;
  double factorization_distance;
  size_t reconstructing_sets;
  bool disjoint_copies;
} StqOutcome;

/**
 * Resource counts for the edge code with XOR-shared pad keys.
 */
typedef struct StqCost {
  size_t quantum_shares;
  size_t qubits;
  size_t xor_bits;
  double threshold_bits_estimate;
} StqCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Owned by the library.
 */
const char *stq_last_error(void);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void stq_string_free(char *s);

/**
 * Parse `.stq` text into a new task.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum StqStatus stq_task_parse(const char *text, struct StqTask **out);

/**
 * # Safety
 * `task` must come from [`stq_task_parse`] or be NULL.
 */
void stq_task_free(struct StqTask *task);

/**
 * Decide feasibility. `report`, when not NULL, receives the verdict text.
 *
 * # Safety
 * Pointers must be valid or NULL where allowed.
 */
enum StqStatus stq_check(const struct StqTask *task, bool *feasible, char **report);

/**
 * Synthesize a protocol and return its event log.
 *
 * # Safety
 * Pointers must be valid.
 */
enum StqStatus stq_plan(const struct StqTask *task, char **log);

/**
 * Plan and run one scenario. Exactly one of `access` (a region or set label)
 * and `calls` (comma-separated diamond names, possibly empty) must be non-NULL.
 *
 * # Safety
 * Pointers must be valid or NULL where allowed.
 */
enum StqStatus stq_simulate(const struct StqTask *task,
                            const char *access,
                            const char *calls,
                            uint64_t seed,
                            struct StqOutcome *out);

/**
 * Resource counts for `n` authorized and `m` unauthorized regions.
 *
 * # Safety
 * `out` must be writable.
 */
enum StqStatus stq_scheme_cost(size_t n, size_t m, size_t key_bits, struct StqCost *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPACETIME_TASKS_H */

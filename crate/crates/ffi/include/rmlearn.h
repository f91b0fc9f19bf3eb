#ifndef RMLEARN_H
#define RMLEARN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of adding a trace to a sample.
typedef enum rm_insert {
  RM_INSERT_ADDED = 0,
  RM_INSERT_DUPLICATE = 1,
  RM_INSERT_CONFLICT = 2,
} rm_insert;

// Result codes; `RM_OK` is zero.
typedef enum rm_status {
  RM_OK = 0,
  RM_NULL_POINTER = 1,
  RM_INVALID_ARGUMENT = 2,
  RM_PARSE_ERROR = 3,
  RM_IO_ERROR = 4,
  RM_UNKNOWN_TASK = 5,
  RM_MISMATCH = 6,
  RM_CONFLICT = 7,
  RM_NO_MACHINE = 8,
  RM_BUDGET_EXHAUSTED = 9,
  RM_INTERNAL = 10,
} rm_status;

typedef struct rm_machine rm_machine;

typedef struct rm_sample rm_sample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *rm_last_error(void);

void rm_string_free(char *s);

// Parses a machine in the text format.
enum rm_status rm_machine_parse(const char *text, struct rm_machine **machine);

void rm_machine_free(struct rm_machine *machine);

// Writes the machine in the text format; free the result with
// [`rm_string_free`].
enum rm_status rm_machine_to_string(const struct rm_machine *machine, char **text);

enum rm_status rm_machine_num_states(const struct rm_machine *machine, size_t *states);

enum rm_status rm_machine_num_props(const struct rm_machine *machine, size_t *props);

// One transition. `label` is a bit set over the machine's propositions in
// declaration order.
enum rm_status rm_machine_step(const struct rm_machine *machine,
                               size_t state,
                               uint32_t label,
                               size_t *next,
                               double *reward);

// Whether the machines emit the same rewards on every label sequence.
enum rm_status rm_machines_equivalent(const struct rm_machine *m1,
                                      const struct rm_machine *m2,
                                      bool *equivalent);

// Looks for a label sequence of length at most `horizon` that task
// `task_id`'s environment can produce and on which the machines differ.
// With `episodic`, sequences stop at goal states of `m2`. On success
// `*witness_len` is 0 when none exists; otherwise the witness labels are
// copied into `witness` (up to `capacity` entries).
enum rm_status rm_check_equivalence(const char *task_id,
                                    const struct rm_machine *m1,
                                    const struct rm_machine *m2,
                                    size_t horizon,
                                    bool episodic,
                                    uint32_t *witness,
                                    size_t capacity,
                                    size_t *witness_len);

// Creates an empty sample over the whitespace-separated proposition names.
enum rm_status rm_sample_new(const char *props, struct rm_sample **sample);

// Parses a sample in the text format.
enum rm_status rm_sample_parse(const char *text, struct rm_sample **sample);

void rm_sample_free(struct rm_sample *sample);

enum rm_status rm_sample_len(const struct rm_sample *sample, size_t *len);

// Adds the trace `(labels[i], rewards[i])` for `i < len`.
enum rm_status rm_sample_add_trace(struct rm_sample *sample,
                                   const uint32_t *labels,
                                   const double *rewards,
                                   size_t len,
                                   enum rm_insert *result);

// Infers a machine consistent with the sample by state merging.
enum rm_status rm_learn_rpni(const struct rm_sample *sample, struct rm_machine **machine);

// Infers a minimum-size consistent machine with at most `k_max` states,
// giving up after `budget` search expansions.
enum rm_status rm_learn_exact(const struct rm_sample *sample,
                              size_t k_max,
                              uint64_t budget,
                              struct rm_machine **machine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMLEARN_H */

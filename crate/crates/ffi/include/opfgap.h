#ifndef OPFGAP_H
#define OPFGAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum OpfgapError {
  OPFGAP_ERROR_OK = 0,
  OPFGAP_ERROR_NULL_POINTER = 1,
  OPFGAP_ERROR_INVALID_UTF8 = 2,
  OPFGAP_ERROR_PARSE = 3,
  OPFGAP_ERROR_INVALID_INPUT = 4,
  OPFGAP_ERROR_UNDEFINED_GAP = 5,
  OPFGAP_ERROR_PANIC = 6,
} OpfgapError;

typedef enum OpfgapSolveStatus {
  OPFGAP_SOLVE_STATUS_OPTIMAL = 0,
  OPFGAP_SOLVE_STATUS_LOCALLY_INFEASIBLE = 1,
  OPFGAP_SOLVE_STATUS_ITERATION_LIMIT = 2,
  OPFGAP_SOLVE_STATUS_TIME_LIMIT = 3,
  OPFGAP_SOLVE_STATUS_NUMERIC_FAILURE = 4,
} OpfgapSolveStatus;

// Parsed power network.
typedef struct OpfgapNetwork OpfgapNetwork;

// Result of one solve.
typedef struct OpfgapOutcome OpfgapOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *opfgap_last_error(void);

// Library version as a static NUL-terminated string.
const char *opfgap_version(void);

// Parses MATPOWER case text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum OpfgapError opfgap_network_parse(const char *text, struct OpfgapNetwork **out);

// Loads one of the bundled cases (`case9`, `case14`, `case30`, `case57`, `case118`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum OpfgapError opfgap_network_bundled(const char *name, struct OpfgapNetwork **out);

// Releases a network. Null is ignored.
//
// # Safety
// `net` must come from this library and not be used afterwards.
void opfgap_network_free(struct OpfgapNetwork *net);

// Number of buses, 0 for a null handle.
//
// # Safety
// `net` must be null or a live handle.
size_t opfgap_network_bus_count(const struct OpfgapNetwork *net);

// Number of generators, 0 for a null handle.
//
// # Safety
// `net` must be null or a live handle.
size_t opfgap_network_generator_count(const struct OpfgapNetwork *net);

// Serialises the network as case text. Free the result with
// [`opfgap_string_free`].
//
// # Safety
// `net` must be a live handle and `out` a valid pointer.
enum OpfgapError opfgap_network_write(const struct OpfgapNetwork *net, char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void opfgap_string_free(char *s);

// Builds and solves `model` (`ac`, `qc`, `socp`, `sdp2`, `sdp3`) with every
// load scaled by `t`. A `tolerance` of 0 or less and a `max_iterations`
// of 0 select the defaults. Non-convergence is reported through the
// outcome status, not the return code.
//
// # Safety
// `net` must be a live handle, `model` a NUL-terminated string and `out`
// a valid pointer.
enum OpfgapError opfgap_solve(const struct OpfgapNetwork *net,
                              const char *model,
                              double t,
                              double tolerance,
                              size_t max_iterations,
                              struct OpfgapOutcome **out);

// Releases an outcome. Null is ignored.
//
// # Safety
// `o` must come from this library and not be used afterwards.
void opfgap_outcome_free(struct OpfgapOutcome *o);

// Solver status; `NumericFailure` for a null handle.
//
// # Safety
// `o` must be null or a live handle.
enum OpfgapSolveStatus opfgap_outcome_status(const struct OpfgapOutcome *o);

// Objective at the returned point; NaN for a null handle.
//
// # Safety
// `o` must be null or a live handle.
double opfgap_outcome_objective(const struct OpfgapOutcome *o);

// Iterations used; 0 for a null handle.
//
// # Safety
// `o` must be null or a live handle.
size_t opfgap_outcome_iterations(const struct OpfgapOutcome *o);

// Optimality gap in percent, `100·(1 - relax_cost/ac_cost)`.
//
// # Safety
// `out` must be a valid pointer.
enum OpfgapError opfgap_compute_gap(double ac_cost, double relax_cost, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPFGAP_H */

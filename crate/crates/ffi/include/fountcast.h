/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FOUNTCAST_H
#define FOUNTCAST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum FcStatus {
  FC_STATUS_OK = 0,
  FC_STATUS_NULL_POINTER = 1,
  FC_STATUS_INVALID_UTF8 = 2,
  // Bad scenario, bad argument or an index out of range.
  FC_STATUS_INVALID_ARGUMENT = 3,
  // No allocation meets the outage targets within the budget. The
  // allocation handle is still returned.
  FC_STATUS_INFEASIBLE = 4,
  FC_STATUS_NUMERIC = 5,
  FC_STATUS_PANIC = 6,
} FcStatus;

// Solver selector.
typedef enum FcSolver {
  FC_SOLVER_CONVEX = 0,
  FC_SOLVER_SIMPLIFIED_GD = 1,
  FC_SOLVER_EXHAUSTIVE = 2,
  FC_SOLVER_EEP = 3,
  FC_SOLVER_DYNAMIC = 4,
} FcSolver;

// A solved allocation and the problem it was solved for.
typedef struct FcAllocation FcAllocation;

// A parsed and resolved scenario.
typedef struct FcScenario FcScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if it succeeded.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *fc_last_error(void);

// Library version as a static NUL-terminated string.
const char *fc_version(void);

// Parse a scenario from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum FcStatus fc_scenario_from_json(const char *json, struct FcScenario **out);

// # Safety
// `s` must come from [`fc_scenario_from_json`] and not be freed twice. Null is ignored.
void fc_scenario_free(struct FcScenario *s);

// Service bandwidth of the scenario in symbols.
//
// # Safety
// `s` must be a live scenario handle and `out` writable.
enum FcStatus fc_scenario_n_max(const struct FcScenario *s, uint64_t *out);

// Solve the scenario. `n_max` of 0 uses the scenario's bandwidth.
//
// On [`FcStatus::Ok`] and [`FcStatus::Infeasible`] a handle is written to
// `out`; otherwise `out` is set to null.
//
// # Safety
// `s` must be a live scenario handle and `out` writable.
enum FcStatus fc_solve(const struct FcScenario *s,
                       enum FcSolver solver,
                       uint64_t n_max,
                       struct FcAllocation **out);

// # Safety
// `a` must come from [`fc_solve`] and not be freed twice. Null is ignored.
void fc_allocation_free(struct FcAllocation *a);

// Number of layers.
//
// # Safety
// `a` must be a live allocation handle and `out` writable.
enum FcStatus fc_allocation_layers(const struct FcAllocation *a, size_t *out);

// Minimum reception ratio (MNRC) and symbol count of layer `layer` (0-based).
//
// # Safety
// `a` must be a live allocation handle; `delta` and `symbols` writable.
enum FcStatus fc_allocation_layer(const struct FcAllocation *a,
                                  size_t layer,
                                  double *delta,
                                  uint64_t *symbols);

// Expected utility, the utility ceiling, total symbols and feasibility.
//
// # Safety
// `a` must be a live allocation handle and every output writable.
enum FcStatus fc_allocation_summary(const struct FcAllocation *a,
                                    double *utility,
                                    double *u_max,
                                    uint64_t *total_symbols,
                                    bool *feasible);

// Closed-form outage probability of a block of `s` source symbols sent as
// `n` encoded symbols to a client with reception ratio `delta`, with the
// default code parameters.
//
// # Safety
// `out` must be writable.
enum FcStatus fc_outage_model(uint64_t s, uint64_t n, double delta, double *out);

// Fewest encoded symbols that keep the outage of `s` source symbols at or
// below `p_out` for reception ratio `delta`, with the default code parameters.
//
// # Safety
// `out` must be writable.
enum FcStatus fc_required_symbols(uint64_t s, double delta, double p_out, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOUNTCAST_H */

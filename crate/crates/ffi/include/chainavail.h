#ifndef CHAINAVAIL_H
#define CHAINAVAIL_H

#include <stddef.h>
#include <stdint.h>

typedef enum CaStatus {
  CA_STATUS_OK = 0,
  CA_STATUS_NULL_POINTER = 1,
  CA_STATUS_INVALID_UTF8 = 2,
  CA_STATUS_PARSE = 3,
  CA_STATUS_STRUCTURAL = 4,
  CA_STATUS_DOMAIN = 5,
  CA_STATUS_NUMERICAL = 6,
  CA_STATUS_OVERFLOW = 7,
  CA_STATUS_LIVELOCK = 8,
  CA_STATUS_REDUCIBLE = 9,
  CA_STATUS_NOT_ENABLED = 10,
  CA_STATUS_UNDEFINED_INDEX = 11,
  CA_STATUS_IO = 12,
  CA_STATUS_PANIC = 13,
} CaStatus;

// Parsed scenario file.
typedef struct CaScenario CaScenario;

// Solved steady state of a net.
typedef struct CaSolution CaSolution;

// Stochastic Petri net.
typedef struct CaSpn CaSpn;

// Steady-state measures of one model layer.
typedef struct CaAvailability {
  double availability;
  double unavailability;
  // Hours per year.
  double downtime;
  double mttf;
  double mttr;
  double nines;
} CaAvailability;

typedef struct CaStackResult {
  struct CaAvailability server;
  struct CaAvailability node;
  struct CaAvailability service;
  struct CaAvailability multi_server;
} CaStackResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread; empty after a
// success. Valid until the next call on the same thread.
const char *ca_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ca_version(void);

// Steady-state availability `mttf / (mttf + mttr)` of one component.
//
// # Safety
// `out` must be valid for writes.
enum CaStatus ca_component_availability(double mttf, double mttr, double *out);

// Parses scenario text into a new handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` valid for writes.
enum CaStatus ca_scenario_parse(const char *text, struct CaScenario **out);

// Reads and parses a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid for writes.
enum CaStatus ca_scenario_load(const char *path, struct CaScenario **out);

// Number of validation diagnostics; the first one, if any, becomes the
// last error message.
//
// # Safety
// `scenario` must be a live handle and `count` valid for writes.
enum CaStatus ca_scenario_validate(const struct CaScenario *scenario, size_t *count);

// Evaluates the server, node, service and multi-server layers.
//
// # Safety
// `scenario` must be a live handle and `out` valid for writes.
enum CaStatus ca_scenario_stack_eval(const struct CaScenario *scenario, struct CaStackResult *out);

// # Safety
// `scenario` must be null or a handle from this library, not yet freed.
void ca_scenario_free(struct CaScenario *scenario);

// Service net with the given server and node timing, in hours.
//
// # Safety
// `out` must be valid for writes.
enum CaStatus ca_service_spn_new(double server_mttf,
                                 double server_mttr,
                                 double node_mttf,
                                 double node_mttr,
                                 uint32_t n_miners,
                                 struct CaSpn **out);

// Net declared under `[spn.<name>]` in the scenario.
//
// # Safety
// `scenario` must be a live handle, `name` a NUL-terminated string and
// `out` valid for writes.
enum CaStatus ca_scenario_net(const struct CaScenario *scenario,
                              const char *name,
                              struct CaSpn **out);

// # Safety
// `spn` must be a live handle and `out` valid for writes.
enum CaStatus ca_spn_place_count(const struct CaSpn *spn, size_t *out);

// Builds the tangible state space (at most `max_states` states) and
// solves for the steady state.
//
// # Safety
// `spn` must be a live handle and `out` valid for writes.
enum CaStatus ca_spn_solve(const struct CaSpn *spn, size_t max_states, struct CaSolution **out);

// Monte Carlo estimate of `metric` with a 95% confidence half-width.
//
// # Safety
// `spn` must be a live handle, `metric` a NUL-terminated string and
// `mean`, `halfwidth` valid for writes.
enum CaStatus ca_spn_simulate(const struct CaSpn *spn,
                              const char *metric,
                              double horizon,
                              uint32_t replications,
                              uint64_t seed,
                              double *mean,
                              double *halfwidth);

// # Safety
// `spn` must be null or a handle from this library, not yet freed.
void ca_spn_free(struct CaSpn *spn);

// # Safety
// `solution` must be a live handle and `out` valid for writes.
enum CaStatus ca_solution_state_count(const struct CaSolution *solution, size_t *out);

// Evaluates a `P{...}` or `E{...}` metric on the steady state.
//
// # Safety
// `solution` must be a live handle, `metric` a NUL-terminated string and
// `out` valid for writes.
enum CaStatus ca_solution_metric(const struct CaSolution *solution,
                                 const char *metric,
                                 double *out);

// # Safety
// `solution` must be null or a handle from this library, not yet freed.
void ca_solution_free(struct CaSolution *solution);

// Probability that `k` of `n` pooled containers are failed.
//
// # Safety
// `out` must be valid for writes.
enum CaStatus ca_cts_probability(size_t k, size_t n, double lambda, double mu, double *out);

// Closed-form capacity-oriented availability.
//
// # Safety
// `out` must be valid for writes.
enum CaStatus ca_coa_closed_form(uint32_t n_servers,
                                 uint32_t containers_per_server,
                                 double server_availability,
                                 double container_failure_rate,
                                 double container_repair_rate,
                                 double *out);

// Yearly energy expense in USD of `quantity` devices drawing `power_w`.
//
// # Safety
// `out` must be valid for writes.
enum CaStatus ca_annual_energy_cost(double power_w,
                                    double tariff,
                                    double hours_per_day,
                                    double days_per_year,
                                    uint32_t quantity,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAINAVAIL_H */

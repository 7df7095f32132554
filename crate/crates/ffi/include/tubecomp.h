#ifndef TUBECOMP_H
#define TUBECOMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_UTF8 = 2,
  TC_STATUS_INVALID_CONFIG = 3,
  TC_STATUS_UNKNOWN_SCENARIO = 4,
  TC_STATUS_COMPUTE_FAILED = 5,
  /**
   * The report was produced and some bound check failed.
   */
  TC_STATUS_BOUND_FAILED = 6,
  TC_STATUS_PANIC = 7,
} TcStatus;

/**
 * Opaque scenario handle.
 */
typedef struct TcScenario TcScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next library call on the same thread; do not free.
 */
const char *tc_last_error(void);

/**
 * Parses a scenario config.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum TcStatus tc_scenario_from_json(const char *json, struct TcScenario **out);

/**
 * Looks up a built-in scenario by name.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum TcStatus tc_scenario_builtin(const char *name, struct TcScenario **out);

/**
 * Replaces every random seed of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum TcStatus tc_scenario_set_seed(struct TcScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void tc_scenario_free(struct TcScenario *scenario);

/**
 * Tube volume at radius `r` with its error estimate.
 *
 * # Safety
 * `scenario` must be a live handle; `value` and `error_estimate` valid
 * pointers.
 */
enum TcStatus tc_tube_volume(const struct TcScenario *scenario,
                             double r,
                             double *value,
                             double *error_estimate);

/**
 * Runs the scenario's checks and hands out the JSON report, which the
 * caller frees with `tc_string_free`. Returns `BoundFailed` with the report
 * set when any check failed or errored.
 *
 * # Safety
 * `scenario` must be a live handle and `report_json` a valid pointer.
 */
enum TcStatus tc_verify(const struct TcScenario *scenario, char **report_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void tc_string_free(char *s);

/**
 * sn_H(t) and cs_H(t) of the model space of curvature `h`.
 *
 * # Safety
 * `sn` and `cs` must be valid pointers.
 */
enum TcStatus tc_sn_cs(double h, double t, double *sn, double *cs);

/**
 * Integral-curvature tube bound for Σ^m in M^n.
 *
 * # Safety
 * `bound` must be a valid pointer.
 */
enum TcStatus tc_thm1_bound(size_t n,
                            size_t m,
                            double p,
                            double h,
                            double vol_sigma,
                            double deficit_norm,
                            double r,
                            double *bound);

/**
 * Largest δ with the tube bound at radius `diameter` not above `v0`.
 *
 * # Safety
 * `delta` must be a valid pointer.
 */
enum TcStatus tc_cheeger_delta(size_t n,
                               size_t m,
                               double p,
                               double h,
                               double v0,
                               double diameter,
                               double epsilon,
                               double *delta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TUBECOMP_H */

#ifndef SNGBENCH_H
#define SNGBENCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SngStatus {
  SNG_STATUS_OK = 0,
  SNG_STATUS_NULL_POINTER = 1,
  SNG_STATUS_INVALID_UTF8 = 2,
  SNG_STATUS_INVALID_SCENARIO = 3,
  SNG_STATUS_INVALID_ARGUMENT = 4,
  SNG_STATUS_RUNTIME = 5,
  SNG_STATUS_PANIC = 6,
} SngStatus;

/**
 * Opaque handle to a finished experiment.
 */
typedef struct SngResults SngResults;

/**
 * Opaque scenario handle.
 */
typedef struct SngScenario SngScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *sng_last_error(void);

/**
 * Library version as a static string.
 */
const char *sng_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void sng_string_free(char *s);

/**
 * Parses a scenario document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SngStatus sng_scenario_from_json(const char *json, struct SngScenario **out);

/**
 * Loads a bundled scenario by id.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be writable.
 */
enum SngStatus sng_scenario_bundled(const char *id, struct SngScenario **out);

/**
 * Scenario serialized back to JSON.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum SngStatus sng_scenario_to_json(const struct SngScenario *scenario, char **out);

/**
 * # Safety
 * `scenario` must be null or a handle from this library, not yet freed.
 */
void sng_scenario_free(struct SngScenario *scenario);

/**
 * Runs one closed-loop episode and writes its metric report as JSON.
 *
 * `arm_json` describes planner and navigation input, e.g.
 * `{"planner":"sng","nav":"sng","sampling":"4x10","tbt":true}`.
 *
 * # Safety
 * `scenario` must be a live handle, `arm_json` a NUL-terminated string and
 * `out` writable.
 */
enum SngStatus sng_evaluate(const struct SngScenario *scenario,
                            const char *arm_json,
                            uint64_t seed,
                            char **out);

/**
 * Runs an experiment described by `spec_json`. `threads` = 0 picks the
 * default worker count.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be writable.
 */
enum SngStatus sng_ablate(const char *spec_json, uint32_t threads, struct SngResults **out);

/**
 * Number of cells in a finished experiment, 0 for a null handle.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
size_t sng_results_len(const struct SngResults *results);

/**
 * Aggregate table in `csv`, `markdown` or `jsonl`.
 *
 * # Safety
 * `results` must be a live handle, `format` a NUL-terminated string and
 * `out` writable.
 */
enum SngStatus sng_results_table(const struct SngResults *results, const char *format, char **out);

/**
 * # Safety
 * `results` must be null or a handle from this library, not yet freed.
 */
void sng_results_free(struct SngResults *results);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNGBENCH_H */

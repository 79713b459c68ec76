#ifndef DARKFILTER_H
#define DARKFILTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum DfStatus {
  DF_STATUS_OK = 0,
  DF_STATUS_CONFIG_ERROR = 1,
  DF_STATUS_FILTERING_FAILURE = 2,
  DF_STATUS_NULL_POINTER = 3,
  DF_STATUS_INVALID_UTF8 = 4,
  DF_STATUS_NUMERICAL = 5,
  DF_STATUS_PANIC = 6,
} DfStatus;

// Engine selector for [`df_config_set_engine`].
typedef enum DfEngine {
  DF_ENGINE_EXACT = 0,
  DF_ENGINE_MARKOV = 1,
  DF_ENGINE_LINDBLAD = 2,
} DfEngine;

// Opaque experiment configuration.
typedef struct DfConfig DfConfig;

// Opaque sweep result.
typedef struct DfResult DfResult;

// One row of a sweep.
typedef struct DfSample {
  double z;
  double purity;
  // `Tr|ρ − ρ_d|`, without the factor 1/2.
  double trace_distance;
  double success_probability;
} DfSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a JSON experiment file's contents into a new configuration.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum DfStatus df_config_from_json(const char *json, struct DfConfig **out);

// Loads a built-in experiment (`"fig1"` or `"fig2"`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum DfStatus df_config_from_preset(const char *name, struct DfConfig **out);

// # Safety
// `config` must come from one of the `df_config_from_*` functions.
enum DfStatus df_config_set_engine(struct DfConfig *config, enum DfEngine engine);

// Sets the sweep range; an automatically sized bath grows with `z_max`.
//
// # Safety
// `config` must come from one of the `df_config_from_*` functions.
enum DfStatus df_config_set_z(struct DfConfig *config, double z_max, size_t z_steps);

// # Safety
// `config` must be null or come from a `df_config_from_*` function, and
// must not be used afterwards.
void df_config_free(struct DfConfig *config);

// Runs the configured sweep. The worker thread count follows
// `DARKFILTER_THREADS`.
//
// # Safety
// `config` must be a live configuration and `out` a valid pointer.
enum DfStatus df_run(const struct DfConfig *config, struct DfResult **out);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `result` must be null or a live result.
size_t df_result_len(const struct DfResult *result);

// # Safety
// `result` must be a live result and `out` a valid pointer.
enum DfStatus df_result_sample(const struct DfResult *result, size_t index, struct DfSample *out);

// CSV text of the sweep; release with [`df_string_free`].
//
// # Safety
// `result` must be null or a live result.
char *df_result_csv(const struct DfResult *result);

// # Safety
// `result` must be null or a live result, and must not be used afterwards.
void df_result_free(struct DfResult *result);

// Effective model, spectrum and dark-state certificates as JSON; null on
// failure. Release with [`df_string_free`].
//
// # Safety
// `config` must be null or a live configuration.
char *df_analyze_json(const struct DfConfig *config);

// # Safety
// `s` must be null or a string returned by this library.
void df_string_free(char *s);

// Message of the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *df_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *df_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DARKFILTER_H */

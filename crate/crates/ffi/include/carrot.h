#ifndef CARROT_H
#define CARROT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define CARROT_SCHEMA_EQUALITY 1

#define CARROT_SCHEMA_SUM 2

#define CARROT_SCHEMA_LESS_THAN 4

#define CARROT_SCHEMA_CONSTANT 8

#define CARROT_SCHEMA_ALL 15

#define CARROT_POINTS_ALL 0

#define CARROT_POINTS_ENTRY 1

#define CARROT_POINTS_EXIT 2

#define CARROT_FORMAT_TEXT 0

#define CARROT_FORMAT_STRUCTURED 1

/**
 * Result codes. `CARROT_OK` is zero; everything else is an error.
 */
typedef enum CarrotStatus {
  CARROT_OK = 0,
  CARROT_NULL_ARGUMENT = 1,
  CARROT_INVALID_UTF8 = 2,
  CARROT_PARSE_ERROR = 3,
  CARROT_INCOMPATIBLE = 4,
  CARROT_RUNTIME_ERROR = 5,
  CARROT_INVALID_ARGUMENT = 6,
  CARROT_PANIC = 7,
} CarrotStatus;

typedef struct CarrotModel CarrotModel;

typedef struct CarrotProgram CarrotProgram;

typedef struct CarrotReport CarrotReport;

typedef struct CarrotSpectrum CarrotSpectrum;

typedef struct CarrotTrace CarrotTrace;

/**
 * Engine settings. `schemata` is a mask of `CARROT_SCHEMA_*`, `points` one
 * of `CARROT_POINTS_*`.
 */
typedef struct CarrotConfig {
  uint32_t schemata;
  bool value_sets;
  bool pair_sets;
  uint32_t points;
} CarrotConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *carrot_last_error(void);

void carrot_string_free(char *s);

/**
 * All schemata, value sets and pair sets on, every point.
 */
struct CarrotConfig carrot_config_default(void);

enum CarrotStatus carrot_trace_parse(const char *src, struct CarrotTrace **out);

enum CarrotStatus carrot_trace_write(const struct CarrotTrace *trace, char **out);

size_t carrot_trace_sample_count(const struct CarrotTrace *trace);

void carrot_trace_free(struct CarrotTrace *trace);

/**
 * `config` may be null for the defaults.
 */
enum CarrotStatus carrot_spectrum_compute(const struct CarrotTrace *trace,
                                          const struct CarrotConfig *config,
                                          struct CarrotSpectrum **out);

size_t carrot_spectrum_live_count(const struct CarrotSpectrum *spectrum);

enum CarrotStatus carrot_spectrum_write(const struct CarrotSpectrum *spectrum, char **out);

void carrot_spectrum_free(struct CarrotSpectrum *spectrum);

/**
 * Builds a model from `count` spectra (`count` >= 1).
 */
enum CarrotStatus carrot_model_build(const struct CarrotSpectrum *const *spectra,
                                     size_t count,
                                     struct CarrotModel **out);

/**
 * Folds one more spectrum into `model` in place.
 */
enum CarrotStatus carrot_model_absorb(struct CarrotModel *model,
                                      const struct CarrotSpectrum *spectrum);

size_t carrot_model_live_count(const struct CarrotModel *model);

size_t carrot_model_runs(const struct CarrotModel *model);

enum CarrotStatus carrot_model_write(const struct CarrotModel *model, char **out);

enum CarrotStatus carrot_model_parse(const char *src, struct CarrotModel **out);

void carrot_model_free(struct CarrotModel *model);

enum CarrotStatus carrot_diff(const struct CarrotModel *model,
                              const struct CarrotSpectrum *bad,
                              struct CarrotReport **out);

size_t carrot_report_invalidated_count(const struct CarrotReport *report);

/**
 * Invalidations, value-set and pair-set extensions, and unmodeled points.
 */
size_t carrot_report_finding_count(const struct CarrotReport *report);

/**
 * `format` is `CARROT_FORMAT_TEXT` or `CARROT_FORMAT_STRUCTURED`.
 */
enum CarrotStatus carrot_report_render(const struct CarrotReport *report,
                                       uint32_t format,
                                       char **out);

void carrot_report_free(struct CarrotReport *report);

enum CarrotStatus carrot_program_parse(const char *src, struct CarrotProgram **out);

/**
 * Runs `entry` (null for the default entry) on `args` with default limits.
 *
 * The trace is stored in `*out_trace` even when the run fails, so a halting
 * run can still be diffed. `out_result` and `out_trace` may be null.
 */
enum CarrotStatus carrot_program_run(const struct CarrotProgram *program,
                                     const char *entry,
                                     const int64_t *args,
                                     size_t arg_count,
                                     const char *run_id,
                                     int64_t *out_result,
                                     struct CarrotTrace **out_trace);

void carrot_program_free(struct CarrotProgram *program);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARROT_H */

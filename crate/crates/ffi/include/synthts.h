/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SYNTHTS_H
#define SYNTHTS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum SynthtsStatus {
  SYNTHTS_STATUS_OK = 0,
  SYNTHTS_STATUS_NULL_ARGUMENT = 1,
  SYNTHTS_STATUS_INVALID_ARGUMENT = 2,
  SYNTHTS_STATUS_IO = 3,
  SYNTHTS_STATUS_CHECKSUM = 4,
  SYNTHTS_STATUS_SHAPE = 5,
  SYNTHTS_STATUS_NUMERIC = 6,
  SYNTHTS_STATUS_BUFFER_TOO_SMALL = 7,
  SYNTHTS_STATUS_PANIC = 8,
} SynthtsStatus;

/**
 * Which matrix of an instance to read.
 */
typedef enum SynthtsSeries {
  SYNTHTS_SERIES_CLEAN = 0,
  SYNTHTS_SERIES_MIXED = 1,
} SynthtsSeries;

/**
 * Fitted linear forecaster.
 */
typedef struct SynthtsForecaster SynthtsForecaster;

/**
 * Generated or loaded dataset instance.
 */
typedef struct SynthtsInstance SynthtsInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *synthts_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *synthts_version(void);

/**
 * Generates an instance from TOML text (null for desk-scale defaults).
 *
 * # Safety
 * `config_toml` is null or a NUL-terminated string; `out` is writable.
 */
enum SynthtsStatus synthts_instance_generate(const char *config_toml,
                                             uint64_t seed,
                                             bool use_seed,
                                             struct SynthtsInstance **out);

/**
 * Loads and revalidates an instance directory.
 *
 * # Safety
 * `dir` is a NUL-terminated string; `out` is writable.
 */
enum SynthtsStatus synthts_instance_open(const char *dir, struct SynthtsInstance **out);

/**
 * Writes the instance directory layout.
 *
 * # Safety
 * `inst` is a live handle; `dir` is a NUL-terminated string.
 */
enum SynthtsStatus synthts_instance_write(const struct SynthtsInstance *inst,
                                          const char *dir,
                                          bool with_csv);

/**
 * # Safety
 * `inst` is null or a handle not yet freed.
 */
void synthts_instance_free(struct SynthtsInstance *inst);

/**
 * # Safety
 * `inst` is a live handle; `samples` and `variates` are writable.
 */
enum SynthtsStatus synthts_instance_shape(const struct SynthtsInstance *inst,
                                          size_t *samples,
                                          size_t *variates);

/**
 * Copies a matrix, column-major (`samples` values per variate), into
 * `buf` of `len` doubles.
 *
 * # Safety
 * `inst` is a live handle; `buf` points to `len` writable doubles.
 */
enum SynthtsStatus synthts_instance_copy(const struct SynthtsInstance *inst,
                                         enum SynthtsSeries which,
                                         double *buf,
                                         size_t len);

/**
 * Writes the hex SHA-256 of a matrix (64 chars plus NUL) into `buf`.
 *
 * # Safety
 * `inst` is a live handle; `buf` points to `len` writable bytes.
 */
enum SynthtsStatus synthts_instance_checksum(const struct SynthtsInstance *inst,
                                             enum SynthtsSeries which,
                                             char *buf,
                                             size_t len);

/**
 * Fits the pooled baseline on the observed training split (0.7/0.1/0.2)
 * with per-window normalization.
 *
 * # Safety
 * `inst` is a live handle; `out` is writable.
 */
enum SynthtsStatus synthts_forecaster_fit(const struct SynthtsInstance *inst,
                                          size_t lookback,
                                          size_t horizon,
                                          double lambda,
                                          struct SynthtsForecaster **out);

/**
 * Forecasts `horizon` values from `lookback` inputs.
 *
 * # Safety
 * `model` is a live handle; `input` holds `input_len` doubles and
 * `output` has room for `output_len`.
 */
enum SynthtsStatus synthts_forecaster_predict(const struct SynthtsForecaster *model,
                                              size_t variate,
                                              const double *input,
                                              size_t input_len,
                                              double *output,
                                              size_t output_len);

/**
 * # Safety
 * `model` is a live handle; `path` is a NUL-terminated string.
 */
enum SynthtsStatus synthts_forecaster_save(const struct SynthtsForecaster *model, const char *path);

/**
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum SynthtsStatus synthts_forecaster_load(const char *path, struct SynthtsForecaster **out);

/**
 * Lookback and horizon of a model.
 *
 * # Safety
 * `model` is a live handle; the out pointers are writable.
 */
enum SynthtsStatus synthts_forecaster_dims(const struct SynthtsForecaster *model,
                                           size_t *lookback,
                                           size_t *horizon);

/**
 * # Safety
 * `model` is null or a handle not yet freed.
 */
void synthts_forecaster_free(struct SynthtsForecaster *model);

/**
 * Scores a prediction exchange file against an instance's test split.
 * `.csv` paths are read as CSV, others as the binary format.
 *
 * # Safety
 * `inst` is a live handle; `path` is a NUL-terminated string; the out
 * pointers are writable.
 */
enum SynthtsStatus synthts_evaluate_file(const struct SynthtsInstance *inst,
                                         const char *path,
                                         size_t lookback,
                                         size_t horizon,
                                         size_t stride,
                                         double *mse_clean,
                                         double *mse_noisy);

/**
 * Mean squared error of two equal-length arrays.
 *
 * # Safety
 * `pred` and `target` hold `len` doubles; `out` is writable.
 */
enum SynthtsStatus synthts_mse(const double *pred, const double *target, size_t len, double *out);

/**
 * `ceil(n / t)`; zero when either argument is zero.
 */
size_t synthts_capture_threshold(size_t n, size_t t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNTHTS_H */

#ifndef BEACON_H
#define BEACON_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum BeaconStatus {
  BEACON_STATUS_OK = 0,
  BEACON_STATUS_NULL_POINTER = 1,
  BEACON_STATUS_INVALID_UTF8 = 2,
  BEACON_STATUS_INVALID_INPUT = 3,
  BEACON_STATUS_IO = 4,
  BEACON_STATUS_SCHEMA = 5,
  BEACON_STATUS_PANIC = 6,
} BeaconStatus;

/**
 * A labelled station dataset.
 */
typedef struct BeaconDataset BeaconDataset;

/**
 * A fitted classifier.
 */
typedef struct BeaconModel BeaconModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next library call on this thread.
 */
const char *beacon_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *beacon_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void beacon_string_free(char *s);

/**
 * Loads a model JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BeaconStatus beacon_model_load(const char *path, struct BeaconModel **out);

/**
 * Parses a model from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum BeaconStatus beacon_model_from_json(const char *json, struct BeaconModel **out);

/**
 * Serializes a model to JSON; free the result with `beacon_string_free`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum BeaconStatus beacon_model_to_json(const struct BeaconModel *model, char **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void beacon_model_free(struct BeaconModel *model);

/**
 * Number of input features the model expects, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t beacon_model_n_features(const struct BeaconModel *model);

/**
 * P(on) for each row of a row-major `n_rows × n_features` matrix.
 *
 * # Safety
 * `x` must hold `n_rows * n_features` doubles and `out` room for `n_rows`.
 */
enum BeaconStatus beacon_model_predict_proba(const struct BeaconModel *model,
                                             const double *x,
                                             size_t n_rows,
                                             size_t n_features,
                                             double *out);

/**
 * Class labels (1 = on, 0 = off) for each row.
 *
 * # Safety
 * `x` must hold `n_rows * n_features` doubles and `out` room for `n_rows`.
 */
enum BeaconStatus beacon_model_predict(const struct BeaconModel *model,
                                       const double *x,
                                       size_t n_rows,
                                       size_t n_features,
                                       uint8_t *out);

/**
 * Loads a dataset CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BeaconStatus beacon_dataset_load(const char *path, struct BeaconDataset **out);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void beacon_dataset_free(struct BeaconDataset *dataset);

/**
 * Number of observations, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t beacon_dataset_len(const struct BeaconDataset *dataset);

/**
 * Solar elevation in degrees at a Unix time.
 *
 * # Safety
 * `out` must be writable.
 */
enum BeaconStatus beacon_solar_elevation(double latitude,
                                         double longitude,
                                         double unix_seconds,
                                         double *out);

/**
 * Scores `model` on `dataset` drifted by each level and writes the
 * degradation report as JSON to `out`. Weather at shifted instants is
 * interpolated from the dataset itself. `delayed_response` selects the
 * convention that delays both switch events.
 *
 * # Safety
 * Handles must be live, `levels` must hold `n_levels` values and `out`
 * must be writable.
 */
enum BeaconStatus beacon_degradation_json(const struct BeaconModel *model,
                                          const struct BeaconDataset *dataset,
                                          const uint32_t *levels,
                                          size_t n_levels,
                                          double threshold_pp,
                                          bool delayed_response,
                                          char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEACON_H */

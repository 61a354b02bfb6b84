/* C interface to the quantum reservoir computing simulator. */

#ifndef QRC_H
#define QRC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. The header names these `QRC_STATUS_*`.
 */
typedef enum QrcStatus {
  /**
   * Success.
   */
  QRC_STATUS_OK = 0,
  /**
   * A pointer argument was NULL, a string was not valid UTF-8, or the
   * configuration was rejected.
   */
  QRC_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The computation itself failed.
   */
  QRC_STATUS_RUNTIME_ERROR = 2,
  /**
   * A panic was caught at the boundary; the library state is still
   * usable but the call produced nothing.
   */
  QRC_STATUS_PANIC = 3,
} QrcStatus;

/**
 * Opaque experiment configuration handle.
 */
typedef struct QrcConfig QrcConfig;

/**
 * Opaque result-set handle.
 */
typedef struct QrcRecords QrcRecords;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *qrc_version(void);

/**
 * Message of the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; do not free.
 */
const char *qrc_last_error_message(void);

/**
 * Builds a config from a named preset (e.g. "frp-default", "dsp").
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum QrcStatus qrc_config_from_preset(const char *name, struct QrcConfig **out);

/**
 * Builds a config from a JSON document. The document may be partial if it
 * names a preset under a "preset" key.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum QrcStatus qrc_config_from_json(const char *json, struct QrcConfig **out);

/**
 * Overrides the master seed.
 *
 * # Safety
 * `config` must be a live handle from a `qrc_config_*` constructor.
 */
enum QrcStatus qrc_config_set_seed(struct QrcConfig *config, uint64_t seed);

/**
 * Serializes the resolved config as JSON.
 *
 * # Safety
 * `config` must be a live handle; `out` must be a valid pointer. The
 * returned string is released with `qrc_string_free`.
 */
enum QrcStatus qrc_config_to_json(const struct QrcConfig *config, char **out);

/**
 * Releases a config handle (NULL is a no-op).
 *
 * # Safety
 * `config` must be NULL or a live handle, and must not be used afterwards.
 */
void qrc_config_free(struct QrcConfig *config);

/**
 * Runs the experiment over its Hamiltonian ensemble and returns the
 * records.
 *
 * # Safety
 * `config` must be a live handle; `out` must be a valid pointer.
 */
enum QrcStatus qrc_run(const struct QrcConfig *config, struct QrcRecords **out);

/**
 * Number of records in a result set; 0 for NULL.
 *
 * # Safety
 * `records` must be NULL or a live handle.
 */
uintptr_t qrc_records_len(const struct QrcRecords *records);

/**
 * Serializes a result set as a JSON array.
 *
 * # Safety
 * `records` must be a live handle; `out` must be a valid pointer. The
 * returned string is released with `qrc_string_free`.
 */
enum QrcStatus qrc_records_to_json(const struct QrcRecords *records, char **out);

/**
 * Serializes a result set as CSV with the fixed column set.
 *
 * # Safety
 * `records` must be a live handle; `out` must be a valid pointer. The
 * returned string is released with `qrc_string_free`.
 */
enum QrcStatus qrc_records_to_csv(const struct QrcRecords *records, char **out);

/**
 * Releases a result-set handle (NULL is a no-op).
 *
 * # Safety
 * `records` must be NULL or a live handle, and must not be used afterwards.
 */
void qrc_records_free(struct QrcRecords *records);

/**
 * Releases a string returned through an out-pointer (NULL is a no-op).
 *
 * # Safety
 * `s` must be NULL or a string produced by this library, and must not be
 * used afterwards.
 */
void qrc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRC_H */

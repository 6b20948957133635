#ifndef WALLX_H
#define WALLX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WallxMode {
  WALLX_MODE_BEHREND = 0,
  WALLX_MODE_EULER = 1,
} WallxMode;

typedef enum WallxSource {
  WALLX_SOURCE_BOGOMOLOV = 0,
  WALLX_SOURCE_BUILTIN = 1,
  WALLX_SOURCE_SERIES = 2,
  WALLX_SOURCE_RANKZERO = 3,
  WALLX_SOURCE_USER = 4,
} WallxSource;

typedef enum WallxStatus {
  WALLX_STATUS_OK = 0,
  WALLX_STATUS_NULL_POINTER = 1,
  WALLX_STATUS_INVALID_ARGUMENT = 2,
  WALLX_STATUS_NOT_AVAILABLE = 3,
  WALLX_STATUS_WINDOW_OVERFLOW = 4,
  WALLX_STATUS_INTEGRALITY = 5,
  WALLX_STATUS_INTERNAL = 6,
} WallxStatus;

/**
 * Opaque engine handle.
 */
typedef struct WallxEngine WallxEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an engine. Negative window arguments select the defaults.
 * `dt_json` may be null or a JSON array of `{"r", "c", "m2", "value"}`.
 *
 * # Safety
 * `dt_json` must be null or a valid NUL-terminated string; `out` must be
 * a valid pointer.
 */
enum WallxStatus wallx_engine_new(int64_t m_window,
                                  int64_t r_window,
                                  int64_t n_pad,
                                  const char *dt_json,
                                  struct WallxEngine **out);

/**
 * # Safety
 * `engine` must be null or a handle from [`wallx_engine_new`] not yet freed.
 */
void wallx_engine_free(struct WallxEngine *engine);

/**
 * `P_{n, c[l]}` as a decimal rational string such as `-21/4`.
 *
 * # Safety
 * `engine` must be a live handle and `out` a valid pointer.
 */
enum WallxStatus wallx_pair(const struct WallxEngine *engine,
                            enum WallxMode mode,
                            int64_t c,
                            int64_t n,
                            char **out);

/**
 * `DT(r, c, m2/2)` as a rational string, with its source.
 *
 * # Safety
 * `engine` must be a live handle; `out` and `source` valid pointers.
 */
enum WallxStatus wallx_dt(const struct WallxEngine *engine,
                          int64_t r,
                          int64_t c,
                          int64_t m2,
                          char **out,
                          enum WallxSource *source);

/**
 * Static description of a status code.
 */
const char *wallx_status_message(enum WallxStatus status);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void wallx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WALLX_H */

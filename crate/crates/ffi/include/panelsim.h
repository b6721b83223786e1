#ifndef PANELSIM_H
#define PANELSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Negative values are errors.
 */
typedef enum PanelsimStatus {
  PANELSIM_STATUS_OK = 0,
  PANELSIM_STATUS_NULL_POINTER = -1,
  PANELSIM_STATUS_INVALID_UTF8 = -2,
  /**
   * `*resp_len` holds the size that would have been needed.
   */
  PANELSIM_STATUS_BUFFER_TOO_SMALL = -3,
  /**
   * Request bytes are not exactly one valid request frame.
   */
  PANELSIM_STATUS_BAD_FRAME = -4,
  /**
   * Patch has lint errors or does not build; the device is unchanged.
   */
  PANELSIM_STATUS_PATCH_REJECTED = -5,
  PANELSIM_STATUS_PANIC = -6,
} PanelsimStatus;

/**
 * Opaque device handle.
 */
typedef struct PanelsimDevice PanelsimDevice;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated version string with static lifetime. Do not free.
 */
const char *panelsim_version(void);

/**
 * New device with an empty patch board. Returns NULL only on internal
 * failure. Release with `panelsim_device_free`.
 */
struct PanelsimDevice *panelsim_device_new(uint64_t seed);

/**
 * # Safety
 * `dev` must come from `panelsim_device_new` and not be used afterwards.
 * NULL is ignored.
 */
void panelsim_device_free(struct PanelsimDevice *dev);

/**
 * Loads patch text. On success or rejection `*diagnostics` (if non-NULL)
 * receives the number of diagnostics produced.
 *
 * # Safety
 * `dev` must be a live handle; `text` a NUL-terminated string.
 */
enum PanelsimStatus panelsim_device_load_patch(struct PanelsimDevice *dev,
                                               const char *text,
                                               uint32_t *diagnostics);

/**
 * Executes one request frame and writes the response frame into `resp`.
 * `*resp_len` receives the response length, or the required capacity when
 * `PANELSIM_STATUS_BUFFER_TOO_SMALL` is returned (the command has still
 * run). The protocol status of the command is inside the response frame.
 *
 * # Safety
 * `dev` must be a live handle, `req` readable for `req_len` bytes, `resp`
 * writable for `resp_cap` bytes (may be NULL when `resp_cap` is 0).
 */
enum PanelsimStatus panelsim_device_execute(struct PanelsimDevice *dev,
                                            const uint8_t *req,
                                            size_t req_len,
                                            uint8_t *resp,
                                            size_t resp_cap,
                                            size_t *resp_len);

/**
 * Latched fault bits (see GET_STATUS), or 0 for a NULL handle.
 *
 * # Safety
 * `dev` must be a live handle or NULL.
 */
uint8_t panelsim_device_faults(const struct PanelsimDevice *dev);

/**
 * CRC-8 (poly 0x07, init 0) as used by the frame trailer.
 *
 * # Safety
 * `data` must be readable for `len` bytes; may be NULL when `len` is 0.
 */
uint8_t panelsim_crc8(const uint8_t *data, size_t len);

/**
 * Lints patch text. `*out` receives the rendered diagnostics, one per line
 * with `file` as the prefix, to be released with `panelsim_string_free`.
 * `*errors` (if non-NULL) receives the number of error-severity entries.
 *
 * # Safety
 * `text` and `file` must be NUL-terminated; `out` must be writable.
 */
enum PanelsimStatus panelsim_lint(const char *text, const char *file, char **out, uint32_t *errors);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. NULL is ignored.
 */
void panelsim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PANELSIM_H */

#ifndef VOLTSIM_H
#define VOLTSIM_H

/* Generated from the voltsim-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result discriminant returned by every fallible call.
 */
typedef enum VoltsimStatus {
  VOLTSIM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  VOLTSIM_STATUS_NULL_ARGUMENT = 1,
  /**
   * A value argument failed validation; see `voltsim_last_error`.
   */
  VOLTSIM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Filesystem failure.
   */
  VOLTSIM_STATUS_IO = 3,
  /**
   * A file exists but could not be parsed.
   */
  VOLTSIM_STATUS_PARSE = 4,
  /**
   * Requested voltage is below the crash boundary.
   */
  VOLTSIM_STATUS_CRASH_REGION = 5,
  /**
   * A resource pool is too small for the request.
   */
  VOLTSIM_STATUS_CAPACITY = 6,
  /**
   * Unexpected internal failure.
   */
  VOLTSIM_STATUS_INTERNAL = 7,
} VoltsimStatus;

/**
 * Outcome of decoding one 72-bit SECDED word.
 */
typedef enum VoltsimDecode {
  /**
   * Valid codeword; data returned unchanged.
   */
  VOLTSIM_DECODE_CLEAN = 0,
  /**
   * One data or check bit was flipped and has been corrected.
   */
  VOLTSIM_DECODE_CORRECTED = 1,
  /**
   * Only the overall parity bit was flipped; data untouched.
   */
  VOLTSIM_DECODE_PARITY_CORRECTED = 2,
  /**
   * Uncorrectable double error detected; data is unreliable.
   */
  VOLTSIM_DECODE_DOUBLE_DETECTED = 3,
} VoltsimDecode;

/**
 * Opaque fault-variation map handle.
 */
typedef struct VoltsimFvm VoltsimFvm;

/**
 * Opaque platform description handle.
 */
typedef struct VoltsimProfile VoltsimProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `cap` bytes) and returns the full message length in bytes. With a null
 * or empty buffer it only reports the length.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes, or be null.
 */
uintptr_t voltsim_last_error(char *buf, uintptr_t cap);

/**
 * Resolves a built-in platform (`"vc707"`, `"kc705"`) or a profile JSON
 * path into a new handle.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be writable.
 */
enum VoltsimStatus voltsim_profile_new(const char *name, struct VoltsimProfile **out);

/**
 * # Safety
 * `p` must come from `voltsim_profile_new` and not be freed twice.
 */
void voltsim_profile_free(struct VoltsimProfile *p);

/**
 * Number of BRAM tiles on the platform; 0 for a null handle.
 *
 * # Safety
 * `p` must be a live profile handle or null.
 */
uint32_t voltsim_profile_num_brams(const struct VoltsimProfile *p);

/**
 * Expected chip-wide fault rate in faults per Mbit at one voltage level.
 *
 * # Safety
 * `p` must be a live profile handle; `out` must be writable.
 */
enum VoltsimStatus voltsim_expected_rate(const struct VoltsimProfile *p,
                                         uint32_t voltage_mv,
                                         double temp_c,
                                         double chip_scale,
                                         double *out);

/**
 * Synthesizes a fault-variation map for the chip `(profile, chip_seed)`.
 *
 * # Safety
 * `p` must be a live profile handle; `out` must be writable.
 */
enum VoltsimStatus voltsim_fvm_generate(const struct VoltsimProfile *p,
                                        uint64_t chip_seed,
                                        double chip_scale,
                                        struct VoltsimFvm **out);

/**
 * Loads a serialized map. `profile` may be null, in which case the file's
 * stored profile name must resolve to a built-in platform.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `profile` a live handle
 * or null; `out` writable.
 */
enum VoltsimStatus voltsim_fvm_import(const char *path,
                                      const struct VoltsimProfile *profile,
                                      struct VoltsimFvm **out);

/**
 * Writes the canonical JSON form of the map.
 *
 * # Safety
 * `fvm` must be a live map handle; `path` a valid NUL-terminated string.
 */
enum VoltsimStatus voltsim_fvm_export(const struct VoltsimFvm *fvm, const char *path);

/**
 * # Safety
 * `fvm` must come from a generate or import call and not be freed twice.
 */
void voltsim_fvm_free(struct VoltsimFvm *fvm);

/**
 * Fault cells whose onset lies at or above `voltage_mv` on the exact
 * grid, before run-to-run jitter.
 *
 * # Safety
 * `fvm` must be a live map handle; `out` must be writable.
 */
enum VoltsimStatus voltsim_fvm_cell_count(const struct VoltsimFvm *fvm,
                                          uint32_t voltage_mv,
                                          uint64_t *out);

/**
 * Active fault cells in one realized run at the given conditions.
 *
 * # Safety
 * `fvm` must be a live map handle; `out` must be writable.
 */
enum VoltsimStatus voltsim_fvm_realize_count(const struct VoltsimFvm *fvm,
                                             uint32_t voltage_mv,
                                             double temp_c,
                                             uint64_t run_seed,
                                             uint64_t *out);

/**
 * Check byte (seven Hamming bits plus overall parity) for a 64-bit word.
 */
uint8_t voltsim_secded_encode(uint64_t data);

/**
 * Decodes a received 72-bit word. When `corrected` is non-null it
 * receives the post-correction data (unchanged data for double errors).
 *
 * # Safety
 * `corrected` must be writable or null.
 */
enum VoltsimDecode voltsim_secded_decode(uint64_t data, uint8_t parity, uint64_t *corrected);

/**
 * BRAM subsystem power draw in watts at one voltage level.
 *
 * # Safety
 * `p` must be a live profile handle; `out` must be writable.
 */
enum VoltsimStatus voltsim_power_watts(const struct VoltsimProfile *p,
                                       uint32_t voltage_mv,
                                       bool ecc,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOLTSIM_H */

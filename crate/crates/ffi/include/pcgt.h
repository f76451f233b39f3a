#ifndef PCGT_H
#define PCGT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PcgtStatus {
  PCGT_STATUS_OK = 0,
  PCGT_STATUS_NULL_POINTER = 1,
  PCGT_STATUS_INVALID_ARGUMENT = 2,
  PCGT_STATUS_PARSE_ERROR = 3,
  PCGT_STATUS_CORRUPT_BITSTREAM = 4,
  PCGT_STATUS_GEOMETRY_MISMATCH = 5,
  PCGT_STATUS_NUMERICAL = 6,
  PCGT_STATUS_IO = 7,
  PCGT_STATUS_PANIC = 8,
} PcgtStatus;

/**
 * Owned byte buffer.
 */
typedef struct PcgtBuffer PcgtBuffer;

/**
 * Point positions plus named per-point attribute channels.
 */
typedef struct PcgtCloud PcgtCloud;

typedef struct PcgtEncodeOptions {
  /**
   * Quantization step, at least 1.
   */
  uint16_t qp;
  /**
   * Kept dimensions; 0 selects the mode automatically.
   */
  uint16_t mode;
  double f;
  double t;
  double m;
  /**
   * Rate limit in bits per point for automatic selection; negative or
   * NaN for none.
   */
  double rmax;
  /**
   * Nonzero codes Y, Cb and Cr instead of Y alone.
   */
  uint8_t ycbcr;
} PcgtEncodeOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *pcgt_last_error_message(void);

/**
 * Static description of a status code.
 */
const char *pcgt_status_string(enum PcgtStatus status);

/**
 * Creates a cloud from `count` positions laid out as `x0 y0 z0 x1 ...`.
 *
 * # Safety
 * `xyz` must point to `3 * count` readable doubles (or be null when
 * `count` is 0); `out` must be writable.
 */
enum PcgtStatus pcgt_cloud_new(const double *xyz, size_t count, struct PcgtCloud **out);

/**
 * Parses an ASCII or binary little-endian PLY file held in memory.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum PcgtStatus pcgt_cloud_from_ply(const uint8_t *data, size_t len, struct PcgtCloud **out);

/**
 * Serializes a cloud as PLY; `ascii` nonzero selects the ASCII format.
 *
 * # Safety
 * `cloud` must be a live handle; `out` must be writable.
 */
enum PcgtStatus pcgt_cloud_to_ply(const struct PcgtCloud *cloud,
                                  uint8_t ascii,
                                  struct PcgtBuffer **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `cloud` must be null or a live handle.
 */
size_t pcgt_cloud_point_count(const struct PcgtCloud *cloud);

/**
 * Adds or replaces a channel. Colors are `R`, `G`, `B`; coded channels
 * are `Y`, `Cb`, `Cr`.
 *
 * # Safety
 * `cloud` must be a live handle, `name` a NUL-terminated string and
 * `values` must point to `count` readable doubles.
 */
enum PcgtStatus pcgt_cloud_set_channel(struct PcgtCloud *cloud,
                                       const char *name,
                                       const double *values,
                                       size_t count);

/**
 * Copies a channel into `out`, which must hold exactly the point count.
 *
 * # Safety
 * `cloud` must be a live handle, `name` a NUL-terminated string and `out`
 * must point to `count` writable doubles.
 */
enum PcgtStatus pcgt_cloud_get_channel(const struct PcgtCloud *cloud,
                                       const char *name,
                                       double *out,
                                       size_t count);

/**
 * # Safety
 * `cloud` must be null or a handle not yet freed.
 */
void pcgt_cloud_free(struct PcgtCloud *cloud);

/**
 * Defaults: qp 8, automatic mode, f 0.3, t 0.6, m 0.85, no rate limit,
 * luma only.
 */
struct PcgtEncodeOptions pcgt_encode_options_default(void);

/**
 * Encodes the attributes of `cloud`. `out_reconstruction` may be null;
 * otherwise it receives the attributes a decoder will produce.
 *
 * # Safety
 * `cloud` must be a live handle, `options` readable and `out_bitstream`
 * writable; `out_reconstruction` must be null or writable.
 */
enum PcgtStatus pcgt_encode(const struct PcgtCloud *cloud,
                            const struct PcgtEncodeOptions *options,
                            struct PcgtBuffer **out_bitstream,
                            struct PcgtCloud **out_reconstruction);

/**
 * Decodes a bitstream onto `geometry`, which must list the encoder's
 * points in the same order.
 *
 * # Safety
 * `geometry` must be a live handle, `data` must point to `len` readable
 * bytes and `out` must be writable.
 */
enum PcgtStatus pcgt_decode(const struct PcgtCloud *geometry,
                            const uint8_t *data,
                            size_t len,
                            struct PcgtCloud **out);

/**
 * # Safety
 * `buffer` must be null or a live handle. The pointer is valid until the
 * buffer is freed.
 */
const uint8_t *pcgt_buffer_data(const struct PcgtBuffer *buffer);

/**
 * # Safety
 * `buffer` must be null or a live handle.
 */
size_t pcgt_buffer_len(const struct PcgtBuffer *buffer);

/**
 * # Safety
 * `buffer` must be null or a handle not yet freed.
 */
void pcgt_buffer_free(struct PcgtBuffer *buffer);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCGT_H */

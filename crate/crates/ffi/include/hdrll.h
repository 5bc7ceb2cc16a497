#ifndef HDRLL_H
#define HDRLL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum HdrllStatus {
  HDRLL_STATUS_OK = 0,
  /**
   * A null pointer, bad size or out-of-range option.
   */
  HDRLL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Malformed `.hdr` input.
   */
  HDRLL_STATUS_FORMAT = 2,
  /**
   * A checksum did not match.
   */
  HDRLL_STATUS_CHECKSUM = 3,
  /**
   * Structurally invalid or truncated stream.
   */
  HDRLL_STATUS_CORRUPT = 4,
  /**
   * Unknown coder id or stream version.
   */
  HDRLL_STATUS_UNSUPPORTED = 5,
  /**
   * The stream has no enhancement layer, so only the SDR image is available.
   */
  HDRLL_STATUS_MISSING_ENHANCEMENT = 6,
  HDRLL_STATUS_PANIC = 7,
} HdrllStatus;

typedef enum HdrllMode {
  HDRLL_MODE_NO_SLRME = 0,
  HDRLL_MODE_SLRME = 1,
  HDRLL_MODE_GLOBAL_SLRME = 2,
} HdrllMode;

/**
 * Opaque RGBE image.
 */
typedef struct HdrllImage HdrllImage;

/**
 * Opaque 8-bit RGB image, interleaved.
 */
typedef struct HdrllSdr HdrllSdr;

typedef struct HdrllEncodeOptions {
  /**
   * An [`HdrllMode`] value. Kept as an integer so a bad value from C is
   * reported instead of being undefined behaviour.
   */
  uint32_t mode;
  /**
   * 1..=100
   */
  uint8_t quality;
  /**
   * Gaussian prefilter sigma, 0 disables it.
   */
  double sigma;
  uint8_t lossy_coder;
  uint8_t lossless_coder;
} HdrllEncodeOptions;

/**
 * Bytes owned by the library; release with [`hdrll_buffer_free`].
 */
typedef struct HdrllBuffer {
  uint8_t *data;
  size_t len;
} HdrllBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hdrll_version(void);

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *hdrll_last_error_message(void);

struct HdrllEncodeOptions hdrll_encode_options_default(void);

/**
 * Parse a Radiance `.hdr` file held in memory.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be a valid pointer.
 */
enum HdrllStatus hdrll_image_from_hdr(const uint8_t *data, size_t len, struct HdrllImage **out);

/**
 * Build an image from `width * height` RGBE quadruples in row order.
 *
 * # Safety
 * `rgbe` must point to `width * height * 4` readable bytes; `out` must be valid.
 */
enum HdrllStatus hdrll_image_from_rgbe(uint32_t width,
                                       uint32_t height,
                                       const uint8_t *rgbe,
                                       struct HdrllImage **out);

/**
 * # Safety
 * `img` must be a live handle or null.
 */
uint32_t hdrll_image_width(const struct HdrllImage *img);

/**
 * # Safety
 * `img` must be a live handle or null.
 */
uint32_t hdrll_image_height(const struct HdrllImage *img);

/**
 * Borrow the RGBE quadruples (`width * height * 4` bytes). Valid while `img` lives.
 *
 * # Safety
 * `img` must be a live handle; `data` and `len` must be valid pointers.
 */
enum HdrllStatus hdrll_image_pixels(const struct HdrllImage *img,
                                    const uint8_t **data,
                                    size_t *len);

/**
 * Serialize an image as a run-length encoded `.hdr` file.
 *
 * # Safety
 * `img` must be a live handle; `out` must be valid.
 */
enum HdrllStatus hdrll_image_to_hdr(const struct HdrllImage *img, struct HdrllBuffer *out);

/**
 * # Safety
 * `img` must come from this library and not be freed twice. Null is ignored.
 */
void hdrll_image_free(struct HdrllImage *img);

/**
 * Encode an image into a serialized dual-layer stream. `options` may be
 * null for the defaults.
 *
 * # Safety
 * `img` must be a live handle; `options` null or valid; `out` valid.
 */
enum HdrllStatus hdrll_encode(const struct HdrllImage *img,
                              const struct HdrllEncodeOptions *options,
                              struct HdrllBuffer *out);

/**
 * Reconstruct the exact HDR image from a complete stream.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be valid.
 */
enum HdrllStatus hdrll_decode_hdr(const uint8_t *data, size_t len, struct HdrllImage **out);

/**
 * Decode only the base layer. Works on streams cut anywhere after the base payload.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be valid.
 */
enum HdrllStatus hdrll_decode_sdr(const uint8_t *data, size_t len, struct HdrllSdr **out);

/**
 * # Safety
 * `sdr` must be a live handle or null.
 */
uint32_t hdrll_sdr_width(const struct HdrllSdr *sdr);

/**
 * # Safety
 * `sdr` must be a live handle or null.
 */
uint32_t hdrll_sdr_height(const struct HdrllSdr *sdr);

/**
 * Borrow the interleaved RGB bytes (`width * height * 3`). Valid while `sdr` lives.
 *
 * # Safety
 * `sdr` must be a live handle; `data` and `len` must be valid pointers.
 */
enum HdrllStatus hdrll_sdr_rgb(const struct HdrllSdr *sdr, const uint8_t **data, size_t *len);

/**
 * # Safety
 * `sdr` must come from this library and not be freed twice. Null is ignored.
 */
void hdrll_sdr_free(struct HdrllSdr *sdr);

/**
 * Release a buffer and reset it to empty. Null or empty buffers are ignored.
 *
 * # Safety
 * `buf` must be null or hold a buffer returned by this library.
 */
void hdrll_buffer_free(struct HdrllBuffer *buf);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HDRLL_H */

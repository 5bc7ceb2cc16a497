//! C ABI for the `hdrll` codec.
//!
//! Objects cross the boundary as opaque handles created and destroyed by this
//! library. Every fallible function returns an [`HdrllStatus`]; on failure a
//! description is available from [`hdrll_last_error_message`] on the same
//! thread until the next call into the library. Panics never unwind into C:
//! they are caught and reported as [`HdrllStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hdrll::codec::{LosslessCoderSpec, LossyCoderSpec};
use hdrll::container::{decode_hdr, decode_sdr_bytes, deserialize, encode, serialize, EncodeConfig, Mode};
use hdrll::radiance::{parse_hdr, write_hdr, RadianceImage};
use hdrll::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdrllStatus {
    Ok = 0,
    /// A null pointer, bad size or out-of-range option.
    InvalidArgument = 1,
    /// Malformed `.hdr` input.
    Format = 2,
    /// A checksum did not match.
    Checksum = 3,
    /// Structurally invalid or truncated stream.
    Corrupt = 4,
    /// Unknown coder id or stream version.
    Unsupported = 5,
    /// The stream has no enhancement layer, so only the SDR image is available.
    MissingEnhancement = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdrllMode {
    NoSlrme = 0,
    Slrme = 1,
    GlobalSlrme = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HdrllEncodeOptions {
    /// An [`HdrllMode`] value. Kept as an integer so a bad value from C is
    /// reported instead of being undefined behaviour.
    pub mode: u32,
    /// 1..=100
    pub quality: u8,
    /// Gaussian prefilter sigma, 0 disables it.
    pub sigma: f64,
    pub lossy_coder: u8,
    pub lossless_coder: u8,
}

/// Bytes owned by the library; release with [`hdrll_buffer_free`].
#[repr(C)]
#[derive(Debug)]
pub struct HdrllBuffer {
    pub data: *mut u8,
    pub len: usize,
}

/// Opaque RGBE image.
pub struct HdrllImage {
    inner: RadianceImage,
}

/// Opaque 8-bit RGB image, interleaved.
pub struct HdrllSdr {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> HdrllStatus {
    match err {
        Error::BadSignature
        | Error::TruncatedHeader
        | Error::UnsupportedFormat(_)
        | Error::BadResolution(_)
        | Error::TruncatedScanline(_)
        | Error::RunOverflow(_)
        | Error::LeadingRunMarker(_)
        | Error::ZeroRun(_)
        | Error::Unrepresentable(_) => HdrllStatus::Format,
        Error::EmptyImage
        | Error::DimensionMismatch { .. }
        | Error::InvalidFloat(_)
        | Error::ExponentRange(_)
        | Error::InvalidParameter(_) => HdrllStatus::InvalidArgument,
        Error::Checksum(_) => HdrllStatus::Checksum,
        Error::UnknownCoder { .. } | Error::UnsupportedVersion(_) => HdrllStatus::Unsupported,
        Error::MissingEnhancement => HdrllStatus::MissingEnhancement,
        Error::MissingRegression { .. }
        | Error::CorruptPayload(_)
        | Error::MalformedEscape
        | Error::BadMagic
        | Error::Overrun(_) => HdrllStatus::Corrupt,
    }
}

struct Fail(HdrllStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(HdrllStatus::InvalidArgument, msg.to_owned())
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HdrllStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HdrllStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_error(format!("internal panic: {msg}"));
            HdrllStatus::Panic
        }
    }
}

/// # Safety
/// `data` must point to `len` readable bytes, or be null with `len == 0`.
unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Fail> {
    if data.is_null() {
        return if len == 0 {
            Ok(&[])
        } else {
            Err(invalid("null data pointer"))
        };
    }
    Ok(std::slice::from_raw_parts(data, len))
}

fn into_buffer(v: Vec<u8>) -> HdrllBuffer {
    let mut b = v.into_boxed_slice();
    let out = HdrllBuffer {
        data: b.as_mut_ptr(),
        len: b.len(),
    };
    std::mem::forget(b);
    out
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hdrll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn hdrll_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn hdrll_encode_options_default() -> HdrllEncodeOptions {
    let d = EncodeConfig::default();
    HdrllEncodeOptions {
        mode: HdrllMode::Slrme as u32,
        quality: d.lossy.quality,
        sigma: d.sigma,
        lossy_coder: d.lossy.coder_id,
        lossless_coder: d.lossless.coder_id,
    }
}

/// Parse a Radiance `.hdr` file held in memory.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hdrll_image_from_hdr(data: *const u8, len: usize, out: *mut *mut HdrllImage) -> HdrllStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        let img = parse_hdr(bytes(data, len)?)?;
        *out = Box::into_raw(Box::new(HdrllImage { inner: img }));
        Ok(())
    })
}

/// Build an image from `width * height` RGBE quadruples in row order.
///
/// # Safety
/// `rgbe` must point to `width * height * 4` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hdrll_image_from_rgbe(
    width: u32,
    height: u32,
    rgbe: *const u8,
    out: *mut *mut HdrllImage,
) -> HdrllStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        let n = (width as usize)
            .checked_mul(height as usize)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| invalid("image too large"))?;
        let raw = bytes(rgbe, n)?;
        let pixels = raw.chunks_exact(4).map(|p| [p[0], p[1], p[2], p[3]]).collect();
        let img = RadianceImage::new(width as usize, height as usize, pixels)?;
        *out = Box::into_raw(Box::new(HdrllImage { inner: img }));
        Ok(())
    })
}

/// # Safety
/// `img` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hdrll_image_width(img: *const HdrllImage) -> u32 {
    img.as_ref().map_or(0, |i| i.inner.width as u32)
}

/// # Safety
/// `img` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hdrll_image_height(img: *const HdrllImage) -> u32 {
    img.as_ref().map_or(0, |i| i.inner.height as u32)
}

/// Borrow the RGBE quadruples (`width * height * 4` bytes). Valid while `img` lives.
///
/// # Safety
/// `img` must be a live handle; `data` and `len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hdrll_image_pixels(
    img: *const HdrllImage,
    data: *mut *const u8,
    len: *mut usize,
) -> HdrllStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| invalid("null image"))?;
        if data.is_null() || len.is_null() {
            return Err(invalid("null output pointer"));
        }
        *data = img.inner.pixels.as_ptr().cast();
        *len = img.inner.pixels.len() * 4;
        Ok(())
    })
}

/// Serialize an image as a run-length encoded `.hdr` file.
///
/// # Safety
/// `img` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hdrll_image_to_hdr(img: *const HdrllImage, out: *mut HdrllBuffer) -> HdrllStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| invalid("null image"))?;
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        *out = into_buffer(write_hdr(&img.inner, true)?);
        Ok(())
    })
}

/// # Safety
/// `img` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hdrll_image_free(img: *mut HdrllImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Encode an image into a serialized dual-layer stream. `options` may be
/// null for the defaults.
///
/// # Safety
/// `img` must be a live handle; `options` null or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hdrll_encode(
    img: *const HdrllImage,
    options: *const HdrllEncodeOptions,
    out: *mut HdrllBuffer,
) -> HdrllStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| invalid("null image"))?;
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| hdrll_encode_options_default());
        let mode = match o.mode {
            0 => Mode::NoSlrme,
            1 => Mode::Slrme,
            2 => Mode::GlobalSlrme,
            _ => return Err(invalid("unknown mode")),
        };
        let config = EncodeConfig {
            mode,
            sigma: o.sigma,
            lossy: LossyCoderSpec {
                coder_id: o.lossy_coder,
                quality: o.quality,
            },
            lossless: LosslessCoderSpec {
                coder_id: o.lossless_coder,
            },
            ..EncodeConfig::default()
        };
        let stream = encode(&img.inner, &config)?;
        *out = into_buffer(serialize(&stream)?);
        Ok(())
    })
}

/// Reconstruct the exact HDR image from a complete stream.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hdrll_decode_hdr(data: *const u8, len: usize, out: *mut *mut HdrllImage) -> HdrllStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        let img = decode_hdr(&deserialize(bytes(data, len)?)?)?;
        *out = Box::into_raw(Box::new(HdrllImage { inner: img }));
        Ok(())
    })
}

/// Decode only the base layer. Works on streams cut anywhere after the base payload.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hdrll_decode_sdr(data: *const u8, len: usize, out: *mut *mut HdrllSdr) -> HdrllStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        let d = decode_sdr_bytes(bytes(data, len)?)?;
        let sdr = HdrllSdr {
            width: d.image.width,
            height: d.image.height,
            rgb: d.image.interleaved(),
        };
        *out = Box::into_raw(Box::new(sdr));
        Ok(())
    })
}

/// # Safety
/// `sdr` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hdrll_sdr_width(sdr: *const HdrllSdr) -> u32 {
    sdr.as_ref().map_or(0, |s| s.width as u32)
}

/// # Safety
/// `sdr` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hdrll_sdr_height(sdr: *const HdrllSdr) -> u32 {
    sdr.as_ref().map_or(0, |s| s.height as u32)
}

/// Borrow the interleaved RGB bytes (`width * height * 3`). Valid while `sdr` lives.
///
/// # Safety
/// `sdr` must be a live handle; `data` and `len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hdrll_sdr_rgb(sdr: *const HdrllSdr, data: *mut *const u8, len: *mut usize) -> HdrllStatus {
    guard(|| {
        let sdr = sdr.as_ref().ok_or_else(|| invalid("null image"))?;
        if data.is_null() || len.is_null() {
            return Err(invalid("null output pointer"));
        }
        *data = sdr.rgb.as_ptr();
        *len = sdr.rgb.len();
        Ok(())
    })
}

/// # Safety
/// `sdr` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hdrll_sdr_free(sdr: *mut HdrllSdr) {
    if !sdr.is_null() {
        drop(Box::from_raw(sdr));
    }
}

/// Release a buffer and reset it to empty. Null or empty buffers are ignored.
///
/// # Safety
/// `buf` must be null or hold a buffer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn hdrll_buffer_free(buf: *mut HdrllBuffer) {
    let Some(b) = buf.as_mut() else { return };
    if !b.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(b.data, b.len)));
    }
    b.data = ptr::null_mut();
    b.len = 0;
}

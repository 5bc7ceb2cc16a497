//! Conversion between linear float triples and shared-exponent RGBE pixels.
//!
//! `E = ceil(log2(max) + 128)` and `M = floor(256 f / 2^(E-128))`, with the
//! exponent bumped by one when `max` is an exact power of two so the largest
//! mantissa stays in `[128, 255]`. The inverse reconstructs each component at
//! the centre of its quantization bin, `(M + 0.5) / 256 * 2^(E-128)`, which is
//! why a canonical pixel survives a float round-trip unchanged.

use crate::error::{Error, Result};
use crate::radiance::RadianceImage;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FloatPixel {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl FloatPixel {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RgbePixel {
    pub mantissa: [u8; 3],
    pub exponent: u8,
}

impl RgbePixel {
    pub const ZERO: RgbePixel = RgbePixel {
        mantissa: [0; 3],
        exponent: 0,
    };

    pub const fn new(r: u8, g: u8, b: u8, e: u8) -> Self {
        Self {
            mantissa: [r, g, b],
            exponent: e,
        }
    }

    pub fn is_zero(self) -> bool {
        self == Self::ZERO
    }

    /// Largest mantissa in `[128, 255]`, or the all-zero pixel.
    pub fn is_canonical(self) -> bool {
        let max = self.mantissa.into_iter().max().unwrap_or(0);
        max >= 128 || self.is_zero()
    }
}

impl From<[u8; 4]> for RgbePixel {
    fn from(p: [u8; 4]) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }
}

impl From<RgbePixel> for [u8; 4] {
    fn from(p: RgbePixel) -> Self {
        [p.mantissa[0], p.mantissa[1], p.mantissa[2], p.exponent]
    }
}

/// `2^n` built directly from its bit pattern; exact for normal results.
fn pow2(n: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&n));
    f64::from_bits(((n + 1023) as u64) << 52)
}

/// Split a positive finite `x` into `m * 2^e` with `m` in `[0.5, 1)`.
fn frexp(x: f64) -> (f64, i32) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        let (m, e) = frexp(x * pow2(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, biased - 1022)
}

pub fn float_to_rgbe(p: FloatPixel) -> Result<RgbePixel> {
    let f = p.to_array();
    for &c in &f {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidFloat(c));
        }
    }
    let max = f.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(RgbePixel::ZERO);
    }
    // frexp's exponent is ceil(log2(max)) except at exact powers of two,
    // where it is one larger: exactly the corrected E.
    let (_, e) = frexp(max);
    let exponent = e as i64 + 128;
    if !(0..=255).contains(&exponent) {
        return Err(Error::ExponentRange(exponent));
    }
    let scale = pow2(8 - e);
    let mantissa = f.map(|c| (c * scale).floor().clamp(0.0, 255.0) as u8);
    Ok(RgbePixel {
        mantissa,
        exponent: exponent as u8,
    })
}

pub fn rgbe_to_float(p: RgbePixel) -> FloatPixel {
    if p.is_zero() {
        return FloatPixel::default();
    }
    let scale = pow2(p.exponent as i32 - 128 - 8);
    let [r, g, b] = p.mantissa.map(|m| (m as f64 + 0.5) * scale);
    FloatPixel { r, g, b }
}

/// `float_to_rgbe(rgbe_to_float(p))`. The identity for canonical pixels.
pub fn rgbe_roundtrip(p: RgbePixel) -> Result<RgbePixel> {
    float_to_rgbe(rgbe_to_float(p))
}

/// Linear radiance of every pixel, in raster order.
pub fn image_to_floats(image: &RadianceImage) -> Vec<FloatPixel> {
    image.pixels.iter().map(|&p| rgbe_to_float(p.into())).collect()
}

//! Global photographic tone mapping (Reinhard-style) to an 8-bit SDR image.
//!
//! Runs once on the encoder side to produce the base-layer picture. The
//! decoder never tone maps; it reads the SDR image straight out of the base
//! layer.

use std::io::Write;

use crate::error::{Error, Result};
use crate::rgbe::FloatPixel;

const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Planar 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdrImage {
    pub width: usize,
    pub height: usize,
    /// R, G, B planes in raster order.
    pub planes: [Vec<u8>; 3],
}

impl SdrImage {
    pub fn new(width: usize, height: usize, planes: [Vec<u8>; 3]) -> Result<Self> {
        let n = width * height;
        if let Some(p) = planes.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.len(),
            });
        }
        Ok(Self { width, height, planes })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            planes: [vec![0; n], vec![0; n], vec![0; n]],
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// R, G, B planes back to back; the byte order checksummed by payloads.
    pub fn planar_bytes(&self) -> Vec<u8> {
        self.planes.concat()
    }

    pub fn interleaved(&self) -> Vec<u8> {
        (0..self.len())
            .flat_map(|i| self.planes.iter().map(move |p| p[i]))
            .collect()
    }

    /// Binary PPM (P6, maxval 255).
    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.interleaved())
    }
}

/// Operator settings. A `white_point` of `None` uses the largest scaled
/// luminance in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmoParams {
    pub key: f64,
    pub white_point: Option<f64>,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for TmoParams {
    fn default() -> Self {
        Self {
            key: 0.18,
            white_point: None,
            gamma: 2.2,
            epsilon: 1e-6,
        }
    }
}

impl TmoParams {
    pub const ENCODED_LEN: usize = 32;

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.key) || !pos(self.gamma) || !pos(self.epsilon) {
            return Err(Error::InvalidParameter("tone map parameters must be positive"));
        }
        if self.epsilon > 1e-3 {
            return Err(Error::InvalidParameter("tone map epsilon must be at most 1e-3"));
        }
        if matches!(self.white_point, Some(w) if !pos(w)) {
            return Err(Error::InvalidParameter("white point must be positive"));
        }
        Ok(())
    }

    /// Little-endian `key, white (0 = auto), gamma, epsilon` as f64s.
    pub fn to_bytes(&self) -> Vec<u8> {
        [self.key, self.white_point.unwrap_or(0.0), self.gamma, self.epsilon]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect()
    }

    pub fn from_bytes(b: &[u8]) -> Option<Self> {
        if b.len() != Self::ENCODED_LEN {
            return None;
        }
        let f = |i: usize| f64::from_le_bytes(b[i * 8..i * 8 + 8].try_into().unwrap());
        let white = f(1);
        Some(Self {
            key: f(0),
            white_point: (white != 0.0).then_some(white),
            gamma: f(2),
            epsilon: f(3),
        })
    }
}

/// `round(255 * clamp(v, 0, 1))`, ties away from zero.
pub fn srgb_quantize(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

pub fn luminance(p: FloatPixel) -> f64 {
    LUMA[0] * p.r + LUMA[1] * p.g + LUMA[2] * p.b
}

pub fn tone_map(hdr: &[FloatPixel], width: usize, height: usize, params: &TmoParams) -> Result<SdrImage> {
    params.validate()?;
    let n = width * height;
    if hdr.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: hdr.len(),
        });
    }
    for p in hdr {
        for c in p.to_array() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidFloat(c));
            }
        }
    }

    let lum: Vec<f64> = hdr.iter().map(|&p| luminance(p)).collect();
    if n == 0 || lum.iter().all(|&l| l == 0.0) {
        return Ok(SdrImage::zeros(width, height));
    }

    // Statistics pass.
    let log_sum: f64 = lum.iter().map(|&l| (params.epsilon + l).ln()).sum();
    let log_avg = (log_sum / n as f64).exp();
    let scale = params.key / log_avg;
    let white = params
        .white_point
        .unwrap_or_else(|| lum.iter().fold(0.0, |m: f64, &l| m.max(l * scale)));
    let inv_white2 = 1.0 / (white * white);
    let inv_gamma = 1.0 / params.gamma;

    // Mapping pass.
    let mut out = SdrImage::zeros(width, height);
    for (i, (&p, &lw)) in hdr.iter().zip(&lum).enumerate() {
        if lw <= 0.0 {
            continue;
        }
        let l = lw * scale;
        let ld = l * (1.0 + l * inv_white2) / (1.0 + l);
        let ratio = ld / lw;
        for (plane, c) in out.planes.iter_mut().zip(p.to_array()) {
            let v = (c * ratio).clamp(0.0, 1.0);
            plane[i] = srgb_quantize(v.powf(inv_gamma));
        }
    }
    Ok(out)
}

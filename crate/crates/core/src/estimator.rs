//! Mantissa estimation from the decoded SDR image.
//!
//! Each mantissa plane is modelled as an affine function of the
//! Gaussian-smoothed SDR channel, with a separate `(a, b)` pair for every
//! exponent value: pixels that share an exponent form one regression region,
//! which keeps the fit away from the mantissa discontinuities at exponent
//! boundaries. Parameters are fitted once by the encoder with the closed-form
//! least-squares solution, rounded to `f32` and transmitted; the decoder only
//! evaluates them.
//!
//! Everything the decoder evaluates (kernel weights, filtering, the affine
//! map and rounding) uses plain IEEE arithmetic with no libm calls, so both
//! sides compute bit-identical estimates.

use crate::error::{Error, Result};
use crate::radiance::HdrPlanes;
use crate::tonemap::SdrImage;

/// Denominators below this fraction of `n * sum(x^2)` are treated as zero.
const DEGENERATE_REL: f64 = 1e-12;

/// Gaussian-filtered SDR image, kept in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSdr {
    pub width: usize,
    pub height: usize,
    pub planes: [Vec<f64>; 3],
}

impl FilteredSdr {
    /// The SDR samples as reals, unfiltered.
    pub fn unfiltered(s: &SdrImage) -> Self {
        Self {
            width: s.width,
            height: s.height,
            planes: s.planes.clone().map(|p| p.into_iter().map(f64::from).collect()),
        }
    }
}

/// `exp(-x)` for `x >= 0` from basic arithmetic only.
fn exp_neg(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let mut halvings = 0;
    let mut r = x;
    while r > 1.0 / 16.0 {
        r *= 0.5;
        halvings += 1;
    }
    // Taylor series of e^{-r}, |r| <= 1/16: 14 terms is far past f64 precision.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..14 {
        term *= -r / k as f64;
        sum += term;
    }
    for _ in 0..halvings {
        sum *= sum;
    }
    sum
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`, `radius = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius).map(|k| exp_neg((k * k) as f64 / denom)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Half-sample symmetric reflection (`... c b a | a b c ...`), periodic with period `2n`.
#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m >= n {
        period as usize - 1 - m
    } else {
        m
    }
}

fn convolve_rows(src: &[f64], dst: &mut [f64], width: usize, kernel: &[f64]) {
    let radius = (kernel.len() / 2) as isize;
    for (row_in, row_out) in src.chunks_exact(width).zip(dst.chunks_exact_mut(width)) {
        for (x, out) in row_out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &w) in kernel.iter().enumerate() {
                acc += w * row_in[mirror(x as isize + j as isize - radius, width)];
            }
            *out = acc;
        }
    }
}

fn convolve_cols(src: &[f64], dst: &mut [f64], width: usize, height: usize, kernel: &[f64]) {
    let radius = (kernel.len() / 2) as isize;
    for y in 0..height {
        let out = &mut dst[y * width..(y + 1) * width];
        out.fill(0.0);
        for (j, &w) in kernel.iter().enumerate() {
            let sy = mirror(y as isize + j as isize - radius, height);
            let row = &src[sy * width..(sy + 1) * width];
            for (o, &v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
    }
}

/// Separable Gaussian blur of each channel with mirrored borders.
///
/// `sigma == 0` returns the samples unfiltered.
pub fn gaussian_prefilter(s: &SdrImage, sigma: f64) -> Result<FilteredSdr> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter("sigma must be a nonnegative finite number"));
    }
    let mut out = FilteredSdr::unfiltered(s);
    if sigma == 0.0 || s.is_empty() {
        return Ok(out);
    }
    let kernel = gaussian_kernel(sigma);
    let mut tmp = vec![0.0; s.len()];
    for plane in out.planes.iter_mut() {
        convolve_rows(plane, &mut tmp, s.width, &kernel);
        convolve_cols(&tmp, plane, s.width, s.height, &kernel);
    }
    Ok(out)
}

/// Running sums for one regression region.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RegionSums {
    pub n: u64,
    pub sx: f64,
    pub sy: f64,
    pub sxy: f64,
    pub sxx: f64,
}

impl RegionSums {
    #[inline]
    pub fn push(&mut self, x: f64, y: u8) {
        let y = y as f64;
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxy += x * y;
        self.sxx += x * x;
    }

    /// Closed-form least squares. A vanishing denominator (constant `x`,
    /// including `n == 1`) gives `a = 0, b = mean(y)`. `None` when empty.
    pub fn solve(&self) -> Option<(f64, f64)> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let den = n * self.sxx - self.sx * self.sx;
        if den > DEGENERATE_REL * n * self.sxx {
            let a = (n * self.sxy - self.sx * self.sy) / den;
            let b = (self.sy - a * self.sx) / n;
            if a.is_finite() && b.is_finite() {
                return Some((a, b));
            }
        }
        Some((0.0, self.sy / n))
    }
}

/// Least-squares `y ~ a x + b` over one region.
pub fn fit_region(x: &[f64], y: &[u8]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let mut sums = RegionSums::default();
    for (&xi, &yi) in x.iter().zip(y) {
        sums.push(xi, yi);
    }
    sums.solve().ok_or(Error::InvalidParameter("empty regression region"))
}

/// How pixels are grouped into regression regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegionMode {
    /// One region per exponent value.
    #[default]
    PerExponent,
    /// A single region covering the whole image, whatever the exponent.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionEntry {
    /// 0 = R, 1 = G, 2 = B.
    pub channel: u8,
    /// Region exponent; 0 for [`RegionMode::Global`].
    pub exponent: u8,
    pub a: f32,
    pub b: f32,
    pub count: u32,
}

/// `[channel][exponent]` affine parameters.
type Lookup = [[Option<(f64, f64)>; 256]; 3];

/// Transmitted regression parameters, sorted by `(channel, exponent)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegressionTable {
    pub mode: RegionMode,
    pub entries: Vec<RegressionEntry>,
}

impl RegressionTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn per_channel_counts(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for e in &self.entries {
            if let Some(c) = out.get_mut(e.channel as usize) {
                *c += 1;
            }
        }
        out
    }

    /// `lookup[channel][exponent]` as f64 pairs, exactly what the estimate evaluates.
    fn lookup(&self) -> Result<Box<Lookup>> {
        let mut t = Box::new([[None; 256]; 3]);
        for e in &self.entries {
            if e.channel > 2 || !e.a.is_finite() || !e.b.is_finite() {
                return Err(Error::CorruptPayload("regression entry"));
            }
            t[e.channel as usize][e.exponent as usize] = Some((e.a as f64, e.b as f64));
        }
        Ok(t)
    }
}

fn check_dims(planes: &HdrPlanes, s_star: &FilteredSdr) -> Result<()> {
    let n = planes.width * planes.height;
    if s_star.width != planes.width || s_star.height != planes.height {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: s_star.width * s_star.height,
        });
    }
    for p in planes.mantissa.iter().chain([&planes.exponent]) {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.len(),
            });
        }
    }
    Ok(())
}

/// Fit `(a, b)` for every non-empty (channel, region) from `S*` against `M`.
pub fn fit_slrme(planes: &HdrPlanes, s_star: &FilteredSdr, mode: RegionMode) -> Result<RegressionTable> {
    check_dims(planes, s_star)?;
    let mut entries = Vec::new();
    for c in 0..3 {
        let mut sums = vec![RegionSums::default(); 256];
        let xs = &s_star.planes[c];
        let ys = &planes.mantissa[c];
        match mode {
            RegionMode::PerExponent => {
                for ((&x, &y), &e) in xs.iter().zip(ys).zip(&planes.exponent) {
                    sums[e as usize].push(x, y);
                }
            }
            RegionMode::Global => {
                for (&x, &y) in xs.iter().zip(ys) {
                    sums[0].push(x, y);
                }
            }
        }
        for (e, s) in sums.iter().enumerate() {
            if let Some((a, b)) = s.solve() {
                let count = u32::try_from(s.n).map_err(|_| Error::InvalidParameter("region too large"))?;
                entries.push(RegressionEntry {
                    channel: c as u8,
                    exponent: e as u8,
                    a: a as f32,
                    b: b as f32,
                    count,
                });
            }
        }
    }
    Ok(RegressionTable { mode, entries })
}

/// `M*(q) = clamp(round(a_E S*(q) + b_E), 0, 255)` per channel, rounding
/// half away from zero.
pub fn estimate_mantissa(s_star: &FilteredSdr, exponent: &[u8], table: &RegressionTable) -> Result<[Vec<u8>; 3]> {
    let n = s_star.width * s_star.height;
    if exponent.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: exponent.len(),
        });
    }
    let lookup = table.lookup()?;
    let mut out: [Vec<u8>; 3] = Default::default();
    for c in 0..3 {
        let params = &lookup[c];
        out[c] = s_star.planes[c]
            .iter()
            .zip(exponent)
            .map(|(&s, &e)| {
                let key = match table.mode {
                    RegionMode::PerExponent => e,
                    RegionMode::Global => 0,
                };
                let (a, b) = params[key as usize].ok_or(Error::MissingRegression {
                    channel: c as u8,
                    exponent: key,
                })?;
                Ok((a * s + b).round().clamp(0.0, 255.0) as u8)
            })
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

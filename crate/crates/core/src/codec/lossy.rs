//! Reference lossy coder: JPEG-like 8x8 block transform coding.
//!
//! RGB is converted to full-range BT.601 YCbCr (rounded to integers, no
//! subsampling), each channel is split into 8x8 blocks (edge blocks padded by
//! replication), transformed with an orthonormal type-II DCT and quantized
//! with the standard luminance/chrominance tables scaled by the usual quality
//! law. Coefficients are sent in zigzag order: the DC as a difference from the
//! previous block of the same channel, the AC as (zero run, level) pairs with
//! an end-of-block symbol, all through the adaptive Rice backend.
//!
//! The decoder uses only tabulated cosines and basic arithmetic so that every
//! platform reconstructs the same pixels.

use super::bits::{unzigzag, zigzag, BitReader, BitWriter, RiceContext};
use super::LossyCoder;
use crate::error::{Error, Result};
use crate::tonemap::SdrImage;

const ESC_BITS: u32 = 16;

#[rustfmt::skip]
const LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[rustfmt::skip]
const CHROMA_TABLE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
];

#[rustfmt::skip]
const ZIGZAG: [usize; 64] = [
     0,  1,  8, 16,  9,  2,  3, 10,
    17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
];

/// cos(k * pi / 16) for k = 0..=8.
const COS16: [f64; 9] = [
    1.0,
    0.980_785_280_403_230_4,
    0.923_879_532_511_286_7,
    0.831_469_612_302_545_2,
    std::f64::consts::FRAC_1_SQRT_2,
    0.555_570_233_019_602_3,
    0.382_683_432_365_089_84,
    0.195_090_322_016_128_33,
    0.0,
];

/// Quality scaling: 5000/Q below 50, 200 - 2Q otherwise.
pub fn quality_scale(quality: u8) -> u32 {
    let q = quality.clamp(1, 100) as u32;
    if q < 50 {
        5000 / q
    } else {
        200 - 2 * q
    }
}

/// Table entries scaled by `round(t * scale / 100)` and clamped to `[1, 255]`.
pub fn scaled_table(base: &[u16; 64], quality: u8) -> [u16; 64] {
    let scale = quality_scale(quality);
    base.map(|t| ((t as u32 * scale + 50) / 100).clamp(1, 255) as u16)
}

pub fn luma_table(quality: u8) -> [u16; 64] {
    scaled_table(&LUMA_TABLE, quality)
}

pub fn chroma_table(quality: u8) -> [u16; 64] {
    scaled_table(&CHROMA_TABLE, quality)
}

fn cos_pi16(m: usize) -> f64 {
    match m % 32 {
        m @ 0..=8 => COS16[m],
        m @ 9..=16 => -COS16[16 - m],
        m @ 17..=24 => -COS16[m - 16],
        m => COS16[32 - m],
    }
}

/// `basis[u][x] = c(u)/2 * cos((2x+1) u pi / 16)`, orthonormal.
fn dct_basis() -> [[f64; 8]; 8] {
    let mut b = [[0.0; 8]; 8];
    for (u, row) in b.iter_mut().enumerate() {
        for (x, v) in row.iter_mut().enumerate() {
            *v = if u == 0 {
                COS16[4] * 0.5
            } else {
                0.5 * cos_pi16((2 * x + 1) * u)
            };
        }
    }
    b
}

fn fdct(block: &[f64; 64], basis: &[[f64; 8]; 8]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    // rows: tmp[y][u] = sum_x basis[u][x] * block[y][x]
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += basis[u][x] * block[y * 8 + x];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += basis[v][y] * tmp[y * 8 + u];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

fn idct(coef: &[f64; 64], basis: &[[f64; 8]; 8]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    // columns: tmp[y][u] = sum_v basis[v][y] * coef[v][u]
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += basis[v][y] * coef[v * 8 + u];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += basis[u][x] * tmp[y * 8 + u];
            }
            out[y * 8 + x] = acc;
        }
    }
    out
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub fn rgb_to_ycbcr(r: u8, g: u8, b: u8) -> [u8; 3] {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    [
        clamp_u8(0.299 * r + 0.587 * g + 0.114 * b),
        clamp_u8(-0.168_736 * r - 0.331_264 * g + 0.5 * b + 128.0),
        clamp_u8(0.5 * r - 0.418_688 * g - 0.081_312 * b + 128.0),
    ]
}

pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let (y, cb, cr) = (y as f64, cb as f64 - 128.0, cr as f64 - 128.0);
    [
        clamp_u8(y + 1.402 * cr),
        clamp_u8(y - 0.344_136 * cb - 0.714_136 * cr),
        clamp_u8(y + 1.772 * cb),
    ]
}

/// Per-channel adaptive coding state.
#[derive(Default)]
struct ChannelState {
    prev_dc: i32,
    dc: RiceContext,
    run: [RiceContext; 3],
    level: [RiceContext; 3],
}

#[inline]
fn band(pos: usize) -> usize {
    match pos {
        0..=5 => 0,
        6..=14 => 1,
        _ => 2,
    }
}

fn level_code(l: i32) -> u32 {
    debug_assert!(l != 0);
    (l.unsigned_abs() - 1) * 2 + (l < 0) as u32
}

fn level_decode(v: u32) -> i32 {
    let mag = (v >> 1) as i32 + 1;
    if v & 1 == 1 {
        -mag
    } else {
        mag
    }
}

fn encode_block(w: &mut BitWriter, st: &mut ChannelState, q: &[i32; 64]) {
    let dc = q[0];
    st.dc.encode(w, zigzag(dc - st.prev_dc), ESC_BITS);
    st.prev_dc = dc;

    let mut run = 0usize;
    let mut pos = 1;
    let last = (1..64).rev().find(|&p| q[ZIGZAG[p]] != 0);
    let Some(last) = last else {
        st.run[0].encode(w, 0, ESC_BITS);
        return;
    };
    while pos <= last {
        let v = q[ZIGZAG[pos]];
        if v == 0 {
            run += 1;
        } else {
            let b = band(pos - run);
            st.run[b].encode(w, run as u32 + 1, ESC_BITS);
            st.level[band(pos)].encode(w, level_code(v), ESC_BITS);
            run = 0;
        }
        pos += 1;
    }
    if last < 63 {
        st.run[band(last + 1)].encode(w, 0, ESC_BITS);
    }
}

fn decode_block(r: &mut BitReader<'_>, st: &mut ChannelState) -> Result<[i32; 64]> {
    let mut q = [0i32; 64];
    let dc = st.prev_dc + unzigzag(st.dc.decode(r, ESC_BITS)?);
    st.prev_dc = dc;
    q[0] = dc;
    let mut pos = 1;
    while pos < 64 {
        let sym = st.run[band(pos)].decode(r, ESC_BITS)?;
        if sym == 0 {
            break;
        }
        pos += sym as usize - 1;
        if pos > 63 {
            return Err(Error::CorruptPayload("zero run past end of block"));
        }
        q[ZIGZAG[pos]] = level_decode(st.level[band(pos)].decode(r, ESC_BITS)?);
        pos += 1;
    }
    Ok(q)
}

fn blocks(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(8), height.div_ceil(8))
}

pub struct BlockDct;

impl LossyCoder for BlockDct {
    fn id(&self) -> u8 {
        1
    }

    fn name(&self) -> &'static str {
        "block-dct"
    }

    fn encode(&self, img: &SdrImage, quality: u8) -> Vec<u8> {
        let (w, h) = (img.width, img.height);
        let n = w * h;
        let mut ycc: [Vec<u8>; 3] = [vec![0; n], vec![0; n], vec![0; n]];
        for i in 0..n {
            let v = rgb_to_ycbcr(img.planes[0][i], img.planes[1][i], img.planes[2][i]);
            for (plane, &x) in ycc.iter_mut().zip(&v) {
                plane[i] = x;
            }
        }
        let tables = [luma_table(quality), chroma_table(quality), chroma_table(quality)];
        let basis = dct_basis();
        let (bw, bh) = blocks(w, h);
        let mut out = BitWriter::new();
        for c in 0..3 {
            let mut st = ChannelState::default();
            for by in 0..bh {
                for bx in 0..bw {
                    let mut block = [0.0; 64];
                    for y in 0..8 {
                        let sy = (by * 8 + y).min(h - 1);
                        for x in 0..8 {
                            let sx = (bx * 8 + x).min(w - 1);
                            block[y * 8 + x] = ycc[c][sy * w + sx] as f64 - 128.0;
                        }
                    }
                    let coef = fdct(&block, &basis);
                    let q: [i32; 64] = std::array::from_fn(|k| (coef[k] / tables[c][k] as f64).round() as i32);
                    encode_block(&mut out, &mut st, &q);
                }
            }
        }
        out.finish()
    }

    fn decode(&self, data: &[u8], width: usize, height: usize, quality: u8) -> Result<SdrImage> {
        let (w, h) = (width, height);
        let n = w * h;
        let tables = [luma_table(quality), chroma_table(quality), chroma_table(quality)];
        let basis = dct_basis();
        let (bw, bh) = blocks(w, h);
        let mut r = BitReader::new(data);
        let mut ycc: [Vec<u8>; 3] = [vec![0; n], vec![0; n], vec![0; n]];
        for c in 0..3 {
            let mut st = ChannelState::default();
            for by in 0..bh {
                for bx in 0..bw {
                    let q = decode_block(&mut r, &mut st)?;
                    let coef: [f64; 64] = std::array::from_fn(|k| q[k] as f64 * tables[c][k] as f64);
                    let px = idct(&coef, &basis);
                    for y in 0..8 {
                        let sy = by * 8 + y;
                        if sy >= h {
                            break;
                        }
                        for x in 0..8 {
                            let sx = bx * 8 + x;
                            if sx >= w {
                                break;
                            }
                            ycc[c][sy * w + sx] = clamp_u8(px[y * 8 + x] + 128.0);
                        }
                    }
                }
            }
        }
        r.finish()?;
        let mut planes: [Vec<u8>; 3] = [vec![0; n], vec![0; n], vec![0; n]];
        for i in 0..n {
            let rgb = ycbcr_to_rgb(ycc[0][i], ycc[1][i], ycc[2][i]);
            for c in 0..3 {
                planes[c][i] = rgb[c];
            }
        }
        SdrImage::new(w, h, planes)
    }
}

/// Planar RGB bytes stored verbatim; a lossless base layer.
pub struct RawRgb;

impl LossyCoder for RawRgb {
    fn id(&self) -> u8 {
        0
    }

    fn name(&self) -> &'static str {
        "raw"
    }

    fn encode(&self, img: &SdrImage, _quality: u8) -> Vec<u8> {
        img.planar_bytes()
    }

    fn decode(&self, data: &[u8], width: usize, height: usize, _quality: u8) -> Result<SdrImage> {
        let n = width * height;
        if data.len() != 3 * n {
            return Err(Error::CorruptPayload("raw image size"));
        }
        SdrImage::new(
            width,
            height,
            [data[..n].to_vec(), data[n..2 * n].to_vec(), data[2 * n..].to_vec()],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_law() {
        assert_eq!(quality_scale(50), 100);
        assert_eq!(luma_table(50), LUMA_TABLE);
        assert_eq!(chroma_table(50), CHROMA_TABLE);
        assert_eq!(quality_scale(85), 30);
        let t = luma_table(85);
        for (k, &base) in LUMA_TABLE.iter().enumerate() {
            let expect = ((base as f64 * 30.0 / 100.0).round() as u16).max(1);
            assert_eq!(t[k], expect);
        }
        assert_eq!(luma_table(100), [1; 64]);
        assert_eq!(quality_scale(10), 500);
        assert_eq!(luma_table(1)[0], 255);
    }

    #[test]
    fn cosine_table_matches_libm() {
        for (k, &c) in COS16.iter().enumerate() {
            assert!((c - (k as f64 * std::f64::consts::PI / 16.0).cos()).abs() < 1e-15);
        }
        // libm's argument reduction of m*pi/16 loses a few ulps for larger m.
        for m in 0..64 {
            assert!((cos_pi16(m) - (m as f64 * std::f64::consts::PI / 16.0).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn dct_is_orthonormal() {
        let b = dct_basis();
        for u in 0..8 {
            for v in 0..8 {
                let dot: f64 = (0..8).map(|x| b[u][x] * b[v][x]).sum();
                assert!((dot - if u == v { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let block: [f64; 64] = std::array::from_fn(|i| ((i * 37) % 255) as f64 - 128.0);
        let back = idct(&fdct(&block, &b), &b);
        for (a, z) in block.iter().zip(back) {
            assert!((a - z).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_gray_exact_at_q100() {
        for v in [0u8, 1, 77, 128, 200, 255] {
            let img = SdrImage::new(13, 9, [vec![v; 117], vec![v; 117], vec![v; 117]]).unwrap();
            let bytes = BlockDct.encode(&img, 100);
            assert_eq!(BlockDct.decode(&bytes, 13, 9, 100).unwrap(), img);
        }
    }

    #[test]
    fn all_zero_image_is_tiny() {
        let img = SdrImage::zeros(64, 64);
        let bytes = BlockDct.encode(&img, 85);
        // One escaped luma DC, then the DC context needs a few dozen blocks to adapt back.
        assert!(bytes.len() < 128, "{}", bytes.len());
        assert_eq!(BlockDct.decode(&bytes, 64, 64, 85).unwrap(), img);
    }

    fn natural(w: usize, h: usize) -> SdrImage {
        let f = |c: usize, x: usize, y: usize| -> u8 {
            let fx = x as f64 / w as f64;
            let fy = y as f64 / h as f64;
            let v = 128.0
                + 90.0 * ((fx * 6.0 + c as f64).sin() * (fy * 4.0).cos())
                + 20.0 * ((x * 7 + y * 3) % 11) as f64 / 11.0;
            v.clamp(0.0, 255.0) as u8
        };
        let planes = [0, 1, 2].map(|c| (0..w * h).map(|i| f(c, i % w, i / w)).collect());
        SdrImage::new(w, h, planes).unwrap()
    }

    #[test]
    fn decode_is_deterministic_and_size_monotone() {
        let img = natural(61, 45);
        let b85 = BlockDct.encode(&img, 85);
        let b100 = BlockDct.encode(&img, 100);
        assert!(b85.len() < b100.len());
        let d1 = BlockDct.decode(&b85, 61, 45, 85).unwrap();
        let d2 = BlockDct.decode(&b85, 61, 45, 85).unwrap();
        assert_eq!(d1, d2);
        let err: f64 = d1.planes[1]
            .iter()
            .zip(&img.planes[1])
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum::<f64>()
            / img.len() as f64;
        assert!(err < 6.0, "mean abs error {err}");
        let d100 = BlockDct.decode(&b100, 61, 45, 100).unwrap();
        for (p, q) in d100.planes.iter().zip(&img.planes) {
            for (&a, &b) in p.iter().zip(q) {
                assert!(a.abs_diff(b) <= 3);
            }
        }
    }

    #[test]
    fn extreme_quality_settings() {
        let img = natural(16, 16);
        for q in [1u8, 2, 30, 99, 100] {
            let bytes = BlockDct.encode(&img, q);
            let out = BlockDct.decode(&bytes, 16, 16, q).unwrap();
            assert_eq!((out.width, out.height), (16, 16));
        }
    }

    #[test]
    fn corrupt_data_is_detected_or_bounded() {
        let img = natural(16, 16);
        let bytes = BlockDct.encode(&img, 85);
        assert!(BlockDct.decode(&bytes[..bytes.len() / 3], 16, 16, 85).is_err());
    }

    #[test]
    fn color_transform_round_trip_is_close() {
        for r in (0..=255).step_by(15) {
            for g in (0..=255).step_by(15) {
                for b in (0..=255).step_by(15) {
                    let [y, cb, cr] = rgb_to_ycbcr(r, g, b);
                    let back = ycbcr_to_rgb(y, cb, cr);
                    for (o, n) in [r, g, b].into_iter().zip(back) {
                        assert!(o.abs_diff(n) <= 2);
                    }
                }
            }
        }
    }
}

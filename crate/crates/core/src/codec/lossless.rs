//! Reference lossless plane coder: median edge detector prediction with
//! context-adaptive Golomb-Rice residuals and a run mode for flat areas.
//!
//! Neighbours are `a` (left), `b` (above) and `c` (above-left). Missing
//! neighbours on the first row or column are substituted from the ones that
//! exist; the origin sample is predicted as 128. Residuals are reduced modulo
//! 256 into `[-128, 127]` before interleaving, so every mapped value fits the
//! 8-bit escape.
//!
//! When `a == b == c` the coder switches to run mode and sends the number of
//! following samples (in raster order, across row ends) equal to `a`. The
//! sample that ends a run is coded in regular mode.

use super::bits::{unzigzag, zigzag, BitReader, BitWriter, RiceContext};
use super::{LosslessCoder, Plane8};
use crate::error::{Error, Result};

const SAMPLE_ESC_BITS: u32 = 8;
const RUN_ESC_BITS: u32 = 32;
const ACTIVITY_BUCKETS: [u32; 7] = [0, 2, 4, 8, 16, 32, 64];

/// Neighbourhood of the sample at `i`: `(a, b, c)`, or `None` at the origin.
#[inline]
fn neighbours(samples: &[u8], width: usize, i: usize) -> Option<(u8, u8, u8)> {
    let (x, y) = (i % width, i / width);
    match (x, y) {
        (0, 0) => None,
        (_, 0) => {
            let a = samples[i - 1];
            Some((a, a, a))
        }
        (0, _) => {
            let b = samples[i - width];
            Some((b, b, b))
        }
        _ => Some((samples[i - 1], samples[i - width], samples[i - width - 1])),
    }
}

#[inline]
fn med(a: u8, b: u8, c: u8) -> u8 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if c >= hi {
        lo
    } else if c <= lo {
        hi
    } else {
        (a as i32 + b as i32 - c as i32) as u8
    }
}

/// MED prediction for sample `(x, y)`; 128 at the origin.
pub fn med_predict(samples: &[u8], width: usize, x: usize, y: usize) -> u8 {
    match neighbours(samples, width, y * width + x) {
        None => 128,
        Some((a, b, c)) => med(a, b, c),
    }
}

#[inline]
fn context(a: u8, b: u8, c: u8) -> usize {
    let act = a.abs_diff(c) as u32 + b.abs_diff(c) as u32;
    ACTIVITY_BUCKETS.iter().filter(|&&t| act > t).count()
}

#[inline]
fn wrap_residual(x: u8, pred: u8) -> i32 {
    (x.wrapping_sub(pred) as i8) as i32
}

struct State {
    regular: [RiceContext; ACTIVITY_BUCKETS.len() + 1],
    run: RiceContext,
}

impl State {
    fn new() -> Self {
        Self {
            regular: Default::default(),
            run: RiceContext::default(),
        }
    }
}

pub struct MedRice;

impl LosslessCoder for MedRice {
    fn id(&self) -> u8 {
        1
    }

    fn name(&self) -> &'static str {
        "med-rice"
    }

    fn encode(&self, plane: &Plane8) -> Vec<u8> {
        let s = &plane.samples;
        let mut st = State::new();
        let mut w = BitWriter::new();
        let mut i = 0;
        while i < s.len() {
            let nb = neighbours(s, plane.width, i);
            if let Some((a, b, c)) = nb {
                if a == b && b == c {
                    let run = s[i..].iter().take_while(|&&v| v == a).count();
                    st.run.encode(&mut w, run as u32, RUN_ESC_BITS);
                    i += run;
                    if i == s.len() {
                        break;
                    }
                    // fall through: the run breaker is coded in regular mode
                    let (a, b, c) = neighbours(s, plane.width, i).unwrap();
                    encode_regular(&mut w, &mut st, s[i], a, b, c);
                    i += 1;
                    continue;
                }
                encode_regular(&mut w, &mut st, s[i], a, b, c);
            } else {
                st.regular[0].encode(&mut w, zigzag(wrap_residual(s[i], 128)), SAMPLE_ESC_BITS);
            }
            i += 1;
        }
        w.finish()
    }

    fn decode(&self, data: &[u8], width: usize, height: usize) -> Result<Plane8> {
        let n = width * height;
        let mut s = vec![0u8; n];
        let mut st = State::new();
        let mut r = BitReader::new(data);
        let mut i = 0;
        while i < n {
            match neighbours(&s, width, i) {
                Some((a, b, c)) if a == b && b == c => {
                    let run = st.run.decode(&mut r, RUN_ESC_BITS)? as usize;
                    if run > n - i {
                        return Err(Error::CorruptPayload("run past end of plane"));
                    }
                    s[i..i + run].fill(a);
                    i += run;
                    if i == n {
                        break;
                    }
                    let (a, b, c) = neighbours(&s, width, i).unwrap();
                    s[i] = decode_regular(&mut r, &mut st, a, b, c)?;
                }
                Some((a, b, c)) => s[i] = decode_regular(&mut r, &mut st, a, b, c)?,
                None => {
                    let v = st.regular[0].decode(&mut r, SAMPLE_ESC_BITS)?;
                    s[i] = 128u8.wrapping_add(unzigzag(v) as u8);
                }
            }
            i += 1;
        }
        r.finish()?;
        Ok(Plane8 {
            width,
            height,
            samples: s,
        })
    }
}

fn encode_regular(w: &mut BitWriter, st: &mut State, x: u8, a: u8, b: u8, c: u8) {
    let pred = med(a, b, c);
    st.regular[context(a, b, c)].encode(w, zigzag(wrap_residual(x, pred)), SAMPLE_ESC_BITS);
}

fn decode_regular(r: &mut BitReader<'_>, st: &mut State, a: u8, b: u8, c: u8) -> Result<u8> {
    let pred = med(a, b, c);
    let v = st.regular[context(a, b, c)].decode(r, SAMPLE_ESC_BITS)?;
    if v > 255 {
        return Err(Error::CorruptPayload("residual out of range"));
    }
    Ok(pred.wrapping_add(unzigzag(v) as u8))
}

/// Samples stored verbatim.
pub struct Stored;

impl LosslessCoder for Stored {
    fn id(&self) -> u8 {
        0
    }

    fn name(&self) -> &'static str {
        "stored"
    }

    fn encode(&self, plane: &Plane8) -> Vec<u8> {
        plane.samples.clone()
    }

    fn decode(&self, data: &[u8], width: usize, height: usize) -> Result<Plane8> {
        if data.len() != width * height {
            return Err(Error::CorruptPayload("stored plane size"));
        }
        Ok(Plane8 {
            width,
            height,
            samples: data.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane(width: usize, height: usize, f: impl FnMut(usize) -> u8) -> Plane8 {
        Plane8 {
            width,
            height,
            samples: (0..width * height).map(f).collect(),
        }
    }

    fn round_trip(p: &Plane8) -> usize {
        let bytes = MedRice.encode(p);
        assert_eq!(&MedRice.decode(&bytes, p.width, p.height).unwrap(), p);
        bytes.len()
    }

    #[test]
    fn origin_predicted_as_128() {
        for v in [0u8, 77, 255] {
            assert_eq!(med_predict(&[v; 16], 4, 0, 0), 128);
        }
        assert_eq!(med_predict(&[9, 3, 0, 0], 2, 1, 0), 9);
        assert_eq!(med_predict(&[9, 3, 0, 0], 2, 0, 1), 9);
    }

    #[test]
    fn med_cases() {
        assert_eq!(med(10, 20, 25), 10);
        assert_eq!(med(10, 20, 5), 20);
        assert_eq!(med(10, 20, 15), 15);
    }

    #[test]
    fn residual_wrap() {
        assert_eq!(wrap_residual(0, 255), 1);
        assert_eq!(wrap_residual(255, 0), -1);
        assert_eq!(wrap_residual(200, 72), -128);
    }

    #[test]
    fn random_planes_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = plane(64, 64, |_| rng.random());
        round_trip(&p);
        for _ in 0..2000 {
            let w = rng.random_range(1..12);
            let h = rng.random_range(1..12);
            let levels = rng.random_range(1..=256u32);
            let p = plane(w, h, |_| (rng.random_range(0..levels)) as u8);
            round_trip(&p);
        }
    }

    #[test]
    fn constant_plane_below_tenth_bpp() {
        let p = plane(64, 64, |_| 42);
        let bytes = round_trip(&p) + 9;
        assert!((bytes * 8) as f64 / 4096.0 < 0.1, "{bytes} bytes");
    }

    #[test]
    fn gradient_beats_noise() {
        let grad = plane(64, 64, |i| ((i % 64) * 2 + i / 64) as u8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = plane(64, 64, |_| rng.random());
        assert!(round_trip(&grad) < round_trip(&noise));
    }

    #[test]
    fn adversarial_planes() {
        round_trip(&plane(33, 7, |i| if i % 2 == 0 { 0 } else { 255 }));
        round_trip(&plane(1, 50, |i| (i * 37) as u8));
        round_trip(&plane(50, 1, |i| (i * 37) as u8));
        round_trip(&plane(16, 16, |i| if i < 200 { 5 } else { 6 }));
    }

    #[test]
    fn truncated_data_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = plane(32, 32, |_| rng.random());
        let bytes = MedRice.encode(&p);
        assert!(MedRice.decode(&bytes[..bytes.len() / 2], 32, 32).is_err());
    }
}

//! Deterministic synthetic `.hdr` corpus.
//!
//! Four kinds of scene: smooth radial gradients covering many exponents,
//! piecewise-constant exposure steps, textured scenes whose mantissas are
//! close to an affine function of the tone-mapped image within each exponent,
//! and flat constant images (index 0 is all zero pixels).

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::radiance::{write_hdr, HeaderLine, RadianceImage};
use crate::rgbe::{float_to_rgbe, FloatPixel};

pub const DEFAULT_SIZE: usize = 256;
pub const DEFAULT_PER_KIND: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Gradient,
    Steps,
    NearAffine,
    Constant,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Gradient, Kind::Steps, Kind::NearAffine, Kind::Constant];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Gradient => "gradient",
            Kind::Steps => "steps",
            Kind::NearAffine => "affine",
            Kind::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthImage {
    pub name: String,
    pub kind: Kind,
    pub image: RadianceImage,
}

fn rng_for(seed: u64, kind: Kind, index: usize) -> ChaCha8Rng {
    let k = Kind::ALL.iter().position(|&x| x == kind).unwrap() as u64;
    ChaCha8Rng::seed_from_u64(seed ^ (k << 56) ^ ((index as u64) << 32))
}

/// Bilinearly interpolated lattice noise in `[0, 1]`.
struct ValueNoise {
    cells: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, cells: usize) -> Self {
        let lattice = (0..(cells + 1) * (cells + 1)).map(|_| rng.random::<f64>()).collect();
        Self { cells, lattice }
    }

    /// `u, v` in `[0, 1]`.
    fn at(&self, u: f64, v: f64) -> f64 {
        let n = self.cells;
        let (fx, fy) = (u * n as f64, v * n as f64);
        let (x0, y0) = ((fx as usize).min(n - 1), (fy as usize).min(n - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let (tx, ty) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
        let l = |x: usize, y: usize| self.lattice[y * (n + 1) + x];
        let top = l(x0, y0) * (1.0 - tx) + l(x0 + 1, y0) * tx;
        let bottom = l(x0, y0 + 1) * (1.0 - tx) + l(x0 + 1, y0 + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn tint(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        0.5 + rng.random::<f64>() * 0.5,
        0.5 + rng.random::<f64>() * 0.5,
        0.5 + rng.random::<f64>() * 0.5,
    ]
}

fn build(size: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> RadianceImage {
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let [r, g, b] = f(x, y);
            pixels.push(
                float_to_rgbe(FloatPixel::new(r, g, b))
                    .expect("synthetic values are finite and in range")
                    .into(),
            );
        }
    }
    let mut img = RadianceImage::new(size, size, pixels).expect("dimensions match");
    img.header.insert(0, HeaderLine::var("SOFTWARE", "hdrll-synth"));
    img
}

fn gradient(size: usize, rng: &mut ChaCha8Rng) -> RadianceImage {
    let c = tint(rng);
    let (cx, cy) = (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7));
    let peak = rng.random_range(2.0..8.0f64);
    // 10 to 14 octaves from the centre to the far corner.
    let octaves = rng.random_range(10.0..14.0);
    let s = size as f64;
    build(size, |x, y| {
        let (u, v) = (x as f64 / s - cx, y as f64 / s - cy);
        let d = (u * u + v * v).sqrt() / std::f64::consts::SQRT_2;
        let l = peak * (-octaves * d).exp2();
        c.map(|t| l * t)
    })
}

fn steps(size: usize, rng: &mut ChaCha8Rng) -> RadianceImage {
    let c = tint(rng);
    let bands = rng.random_range(4..9usize);
    let stops: Vec<f64> = (0..bands).map(|_| rng.random_range(-6..6) as f64).collect();
    let fx = rng.random_range(1.0..3.0);
    let fy = rng.random_range(1.0..3.0);
    let s = size as f64;
    build(size, |x, y| {
        let band = x * bands / size;
        let base = 0.6
            + 0.3
                * (fx * std::f64::consts::TAU * x as f64 / s).sin()
                * (fy * std::f64::consts::TAU * y as f64 / s).cos();
        let l = base * stops[band].exp2();
        c.map(|t| l * t)
    })
}

fn near_affine(size: usize, rng: &mut ChaCha8Rng) -> RadianceImage {
    let c = tint(rng);
    let coarse = ValueNoise::new(rng, 3);
    let detail = ValueNoise::new(rng, size / 8);
    let fine = ValueNoise::new(rng, size / 3);
    let offset = rng.random_range(-4.0..2.0);
    // coarse field drives the exponent, textures ride on top of it
    let span = rng.random_range(6.0..9.0);
    let s = (size - 1).max(1) as f64;
    build(size, |x, y| {
        let (u, v) = (x as f64 / s, y as f64 / s);
        let texture = 0.65 * detail.at(u, v) + 0.35 * fine.at(u, v);
        let l = (offset + span * coarse.at(u, v)).exp2() * (0.55 + 0.9 * texture);
        let mut out = c.map(|t| l * t);
        for o in &mut out {
            *o *= 1.0 + rng.random_range(-0.01..0.01);
        }
        out
    })
}

fn constant(size: usize, rng: &mut ChaCha8Rng, index: usize) -> RadianceImage {
    if index == 0 {
        return build(size, |_, _| [0.0; 3]);
    }
    let l = rng.random_range(-8.0..8.0f64).exp2();
    let c = tint(rng);
    build(size, |_, _| c.map(|t| l * t))
}

/// Image `index` of `kind`, square with side `size`.
pub fn generate(kind: Kind, size: usize, seed: u64, index: usize) -> RadianceImage {
    let mut rng = rng_for(seed, kind, index);
    match kind {
        Kind::Gradient => gradient(size, &mut rng),
        Kind::Steps => steps(size, &mut rng),
        Kind::NearAffine => near_affine(size, &mut rng),
        Kind::Constant => constant(size, &mut rng, index),
    }
}

/// `per_kind` images of every kind, ordered by name.
pub fn corpus(seed: u64, size: usize, per_kind: usize) -> Vec<SynthImage> {
    let mut out = Vec::with_capacity(per_kind * Kind::ALL.len());
    for kind in Kind::ALL {
        for i in 0..per_kind {
            out.push(SynthImage {
                name: format!("{}_{i:02}", kind.name()),
                kind,
                image: generate(kind, size, seed, i),
            });
        }
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// Write the corpus as RLE `.hdr` files into `dir`, creating it if needed.
pub fn write_corpus(dir: &Path, seed: u64, size: usize, per_kind: usize) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for img in corpus(seed, size, per_kind) {
        let bytes = write_hdr(&img.image, true).map_err(std::io::Error::other)?;
        let path = dir.join(format!("{}.hdr", img.name));
        std::fs::write(&path, bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Distinct exponent values in an image.
pub fn distinct_exponents(img: &RadianceImage) -> usize {
    let mut seen = [false; 256];
    for p in &img.pixels {
        seen[p[3] as usize] = true;
    }
    seen.iter().filter(|&&s| s).count()
}

//! Rate and timing benchmark over a corpus of `.hdr` images.
//!
//! Every record is produced only after the decoded HDR image has been
//! compared with the input; a mismatch is reported through `lossless_ok`
//! and makes [`BenchRun::all_lossless`] false.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::codec::LossyCoderSpec;
use crate::container::{bitrate, decode_hdr, deserialize, encode, serialize, EncodeConfig, Mode};
use crate::error::Result;
use crate::radiance::{parse_hdr, RadianceImage};

pub const CSV_HEADER: [&str; 10] = [
    "image_id",
    "mode",
    "quality",
    "bpp_total",
    "bpp_base",
    "bpp_enh",
    "encode_ms",
    "decode_ms",
    "table_entries",
    "lossless_ok",
];

/// Label used in the `image_id` column of the per-mode averages rows.
pub const AVERAGE_ID: &str = "AVERAGE";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub image_id: String,
    pub mode: Mode,
    pub quality: u8,
    pub bpp_total: f64,
    pub bpp_base: f64,
    pub bpp_enh: f64,
    pub encode_ms: f64,
    pub decode_ms: f64,
    pub table_entries: usize,
    pub lossless_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeAverage {
    pub mode: Mode,
    pub images: usize,
    pub bpp_total: f64,
    pub bpp_base: f64,
    pub bpp_enh: f64,
    pub encode_ms: f64,
    pub decode_ms: f64,
    pub table_entries: f64,
    pub lossless_ok: bool,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub modes: Vec<Mode>,
    pub quality: u8,
    pub sigma: f64,
    /// Encodes per image and mode; the fastest one is recorded.
    pub repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            modes: Mode::ALL.to_vec(),
            quality: 85,
            sigma: 1.0,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    /// Ordered by image, then by mode in the order requested.
    pub records: Vec<BenchRecord>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl BenchRun {
    pub fn all_lossless(&self) -> bool {
        self.records.iter().all(|r| r.lossless_ok)
    }

    pub fn average(&self, mode: Mode) -> Option<ModeAverage> {
        let rows: Vec<&BenchRecord> = self.records.iter().filter(|r| r.mode == mode).collect();
        if rows.is_empty() {
            return None;
        }
        Some(ModeAverage {
            mode,
            images: rows.len(),
            bpp_total: mean(rows.iter().map(|r| r.bpp_total)),
            bpp_base: mean(rows.iter().map(|r| r.bpp_base)),
            bpp_enh: mean(rows.iter().map(|r| r.bpp_enh)),
            encode_ms: mean(rows.iter().map(|r| r.encode_ms)),
            decode_ms: mean(rows.iter().map(|r| r.decode_ms)),
            table_entries: mean(rows.iter().map(|r| r.table_entries as f64)),
            lossless_ok: rows.iter().all(|r| r.lossless_ok),
        })
    }

    /// Averages for each mode present, in first-appearance order.
    pub fn averages(&self) -> Vec<ModeAverage> {
        let mut modes: Vec<Mode> = Vec::new();
        for r in &self.records {
            if !modes.contains(&r.mode) {
                modes.push(r.mode);
            }
        }
        modes.into_iter().filter_map(|m| self.average(m)).collect()
    }

    /// Mean encode time of `mode` over that of `baseline`.
    pub fn time_ratio(&self, mode: Mode, baseline: Mode) -> Option<f64> {
        let (a, b) = (self.average(mode)?, self.average(baseline)?);
        (b.encode_ms > 0.0).then(|| a.encode_ms / b.encode_ms)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.records {
            out.write_record([
                r.image_id.clone(),
                r.mode.to_string(),
                r.quality.to_string(),
                format!("{:.6}", r.bpp_total),
                format!("{:.6}", r.bpp_base),
                format!("{:.6}", r.bpp_enh),
                format!("{:.3}", r.encode_ms),
                format!("{:.3}", r.decode_ms),
                r.table_entries.to_string(),
                r.lossless_ok.to_string(),
            ])?;
        }
        let quality = self.records.first().map_or(0, |r| r.quality);
        for a in self.averages() {
            out.write_record([
                AVERAGE_ID.to_owned(),
                a.mode.to_string(),
                quality.to_string(),
                format!("{:.6}", a.bpp_total),
                format!("{:.6}", a.bpp_base),
                format!("{:.6}", a.bpp_enh),
                format!("{:.3}", a.encode_ms),
                format!("{:.3}", a.decode_ms),
                format!("{:.3}", a.table_entries),
                a.lossless_ok.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Encode, decode and verify one image in one mode. Timings exclude file I/O.
pub fn bench_image(id: &str, img: &RadianceImage, mode: Mode, opts: &BenchOptions) -> Result<BenchRecord> {
    let cfg = EncodeConfig {
        mode,
        sigma: opts.sigma,
        lossy: LossyCoderSpec {
            coder_id: 1,
            quality: opts.quality,
        },
        ..EncodeConfig::default()
    };
    let mut best = f64::INFINITY;
    let mut bytes = Vec::new();
    for _ in 0..opts.repeats.max(1) {
        let t = Instant::now();
        let stream = encode(img, &cfg)?;
        bytes = serialize(&stream)?;
        best = best.min(t.elapsed().as_secs_f64() * 1e3);
    }

    let t = Instant::now();
    let stream = deserialize(&bytes)?;
    let decoded = decode_hdr(&stream);
    let decode_ms = t.elapsed().as_secs_f64() * 1e3;

    let rate = bitrate(&stream)?;
    Ok(BenchRecord {
        image_id: id.to_owned(),
        mode,
        quality: opts.quality,
        bpp_total: rate.total,
        bpp_base: rate.base,
        bpp_enh: rate.enhancement,
        encode_ms: best,
        decode_ms,
        table_entries: stream.header.table.len(),
        lossless_ok: decoded.as_ref() == Ok(img),
    })
}

pub fn run(images: &[(String, RadianceImage)], opts: &BenchOptions) -> Result<BenchRun> {
    let mut records = Vec::with_capacity(images.len() * opts.modes.len());
    for (id, img) in images {
        for &mode in &opts.modes {
            records.push(bench_image(id, img, mode, opts)?);
        }
    }
    Ok(BenchRun { records })
}

/// All `.hdr` files directly inside `dir`, sorted by file name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_hdr = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("hdr"));
        if is_hdr && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: crate::Error },
}

/// Parse every `.hdr` file in `dir`; ids are file stems.
pub fn load_corpus(dir: &Path) -> std::result::Result<Vec<(String, RadianceImage)>, LoadError> {
    let files = corpus_files(dir).map_err(|source| LoadError::Io {
        path: dir.to_owned(),
        source,
    })?;
    files
        .into_iter()
        .map(|path| {
            let bytes = std::fs::read(&path).map_err(|source| LoadError::Io {
                path: path.clone(),
                source,
            })?;
            let img = parse_hdr(&bytes).map_err(|source| LoadError::Format {
                path: path.clone(),
                source,
            })?;
            let id = path
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            Ok((id, img))
        })
        .collect()
}

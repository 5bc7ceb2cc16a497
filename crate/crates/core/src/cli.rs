use std::fmt::Write as _;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use hdrll::bench::{self, BenchOptions};
use hdrll::codec::{lossless_decode, LosslessCoderSpec, LossyCoderSpec};
use hdrll::container::{
    bitrate, decode_hdr, decode_sdr_bytes, deserialize, encode_with_report, section_sizes, serialize, EncodeConfig,
    Mode, MAGIC,
};
use hdrll::radiance::{parse_hdr, write_hdr};
use hdrll::synth;
use hdrll::tonemap::TmoParams;

#[derive(Parser, Debug)]
#[command(name = "hdrll", version, about = "Dual-layer lossless coding of Radiance HDR images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Encode a .hdr file into a dual-layer .hll stream.
    Encode(EncodeArgs),
    /// Decode the SDR base layer and/or the exact HDR image.
    Decode(DecodeArgs),
    /// Rate and timing benchmark over a directory of .hdr files.
    Bench(BenchArgs),
    /// Print the structure of a .hll or .hdr file.
    Inspect(InspectArgs),
    /// Write the deterministic synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Base-layer quality factor, 1..=100.
    #[arg(long, default_value_t = 85, value_parser = clap::value_parser!(u8).range(1..=100))]
    quality: u8,
    /// Gaussian prefilter sigma; 0 disables filtering.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Residuals against the base image directly, no regression table.
    #[arg(long, conflicts_with = "global_slrme")]
    no_slrme: bool,
    /// One regression per channel instead of one per exponent.
    #[arg(long)]
    global_slrme: bool,
    #[arg(long, default_value_t = 1)]
    lossy_coder: u8,
    #[arg(long, default_value_t = 1)]
    lossless_coder: u8,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Write the base layer as binary PPM.
    #[arg(long)]
    sdr: Option<PathBuf>,
    /// Write the reconstructed HDR image.
    #[arg(long)]
    hdr: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "no-slrme,slrme,global-slrme")]
    modes: Vec<Mode>,
    #[arg(long, default_value_t = 85, value_parser = clap::value_parser!(u8).range(1..=100))]
    quality: u8,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Encodes per image and mode; the fastest is recorded.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side length in pixels.
    #[arg(long, default_value_t = synth::DEFAULT_SIZE as u16, value_parser = clap::value_parser!(u16).range(1..=32767))]
    size: u16,
    /// Images per scene kind.
    #[arg(long, default_value_t = synth::DEFAULT_PER_KIND)]
    count: usize,
}

/// A one-line diagnostic and the exit code that goes with it.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn codec_err(path: &Path) -> impl Fn(hdrll::Error) -> Failure + '_ {
    move |e| Failure::runtime(format!("{}: {e}", path.display()))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hdrll: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_encode(a: EncodeArgs) -> CmdResult {
    let mode = match (a.no_slrme, a.global_slrme) {
        (true, _) => Mode::NoSlrme,
        (false, true) => Mode::GlobalSlrme,
        (false, false) => Mode::Slrme,
    };
    let config = EncodeConfig {
        mode,
        sigma: a.sigma,
        lossy: LossyCoderSpec {
            coder_id: a.lossy_coder,
            quality: a.quality,
        },
        lossless: LosslessCoderSpec {
            coder_id: a.lossless_coder,
        },
        tmo: TmoParams::default(),
    };
    let img = parse_hdr(&read(&a.input)?).map_err(codec_err(&a.input))?;
    let (stream, report) = encode_with_report(&img, &config).map_err(codec_err(&a.input))?;
    let bytes = serialize(&stream).map_err(codec_err(&a.output))?;
    write(&a.output, &bytes)?;
    let rate = bitrate(&stream).map_err(codec_err(&a.output))?;
    let t = report.timings;
    println!(
        "{} bytes mode={} entries={} bpp_total={:.4} bpp_base={:.4} bpp_enh={:.4} bpp_header={:.4} bpp_payload_only={:.4} \
         encode_ms={:.2} tonemap_ms={:.2} base_ms={:.2} filter_ms={:.2} fit_ms={:.2} estimate_ms={:.2} lossless_ms={:.2}",
        bytes.len(),
        mode,
        stream.header.table.len(),
        rate.total,
        rate.base,
        rate.enhancement,
        rate.header,
        rate.payload_only,
        ms(t.total),
        ms(t.tone_map),
        ms(t.base_layer),
        ms(t.prefilter),
        ms(t.fit),
        ms(t.estimate),
        ms(t.enhancement),
    );
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> CmdResult {
    if a.sdr.is_none() && a.hdr.is_none() {
        return Err(Failure::usage("decode: at least one of --sdr or --hdr is required"));
    }
    let bytes = read(&a.input)?;
    if let Some(hdr_path) = &a.hdr {
        let stream = deserialize(&bytes).map_err(codec_err(&a.input))?;
        let img = decode_hdr(&stream).map_err(codec_err(&a.input))?;
        write(hdr_path, &write_hdr(&img, true).map_err(codec_err(hdr_path))?)?;
    }
    if let Some(sdr_path) = &a.sdr {
        // Header and base payload only; whatever follows is never parsed.
        let sdr = decode_sdr_bytes(&bytes).map_err(codec_err(&a.input))?.image;
        let file =
            std::fs::File::create(sdr_path).map_err(|e| Failure::runtime(format!("{}: {e}", sdr_path.display())))?;
        sdr.write_ppm(BufWriter::new(file))
            .map_err(|e| Failure::runtime(format!("{}: {e}", sdr_path.display())))?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    if a.modes.is_empty() {
        return Err(Failure::usage("bench: --modes must name at least one mode"));
    }
    let images = bench::load_corpus(&a.corpus).map_err(|e| Failure::runtime(e.to_string()))?;
    if images.is_empty() {
        return Err(Failure::runtime(format!("{}: no .hdr files", a.corpus.display())));
    }
    let opts = BenchOptions {
        modes: a.modes,
        quality: a.quality,
        sigma: a.sigma,
        repeats: a.repeats,
    };
    let run = bench::run(&images, &opts).map_err(|e| Failure::runtime(e.to_string()))?;
    if let Some(bad) = run.records.iter().find(|r| !r.lossless_ok) {
        return Err(Failure::runtime(format!(
            "bench: {} ({}) did not round-trip losslessly; no results written",
            bad.image_id, bad.mode
        )));
    }
    let file = std::fs::File::create(&a.out).map_err(|e| Failure::runtime(format!("{}: {e}", a.out.display())))?;
    run.write_csv(BufWriter::new(file))
        .map_err(|e| Failure::runtime(format!("{}: {e}", a.out.display())))?;

    for avg in run.averages() {
        println!(
            "{:<13} images={} bpp_total={:.4} bpp_base={:.4} bpp_enh={:.4} encode_ms={:.2} decode_ms={:.2} entries={:.1}",
            avg.mode, avg.images, avg.bpp_total, avg.bpp_base, avg.bpp_enh, avg.encode_ms, avg.decode_ms, avg.table_entries
        );
    }
    if let Some(r) = run.time_ratio(Mode::Slrme, Mode::NoSlrme) {
        println!("encode time slrme/no-slrme = {r:.3}");
    }
    Ok(())
}

fn histogram(exponent: &[u8]) -> String {
    let mut counts = [0usize; 256];
    for &e in exponent {
        counts[e as usize] += 1;
    }
    let bins: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(e, n)| format!("{e}:{n}"))
        .collect();
    format!("exponent histogram ({} bins): {}", bins.len(), bins.join(" "))
}

fn inspect_hll(path: &Path, bytes: &[u8]) -> Result<String, Failure> {
    let err = codec_err(path);
    let stream = deserialize(bytes).map_err(&err)?;
    let h = &stream.header;
    let sizes = section_sizes(&stream).map_err(&err)?;
    let mut out = String::new();
    let _ = writeln!(out, "format: HDLL v{}", h.version);
    let _ = writeln!(out, "size: {}x{} orientation {:?}", h.width, h.height, h.orientation);
    let _ = writeln!(out, "mode: {}", h.mode);
    let _ = writeln!(
        out,
        "lossy coder: {} quality {}; lossless coder: {}",
        h.lossy.coder_id, h.lossy.quality, h.lossless.coder_id
    );
    let _ = writeln!(out, "sigma: {:.3}", h.sigma());
    match TmoParams::from_bytes(&h.tmo_record) {
        Some(t) => {
            let white = t.white_point.map_or("auto".to_owned(), |w| w.to_string());
            let _ = writeln!(
                out,
                "tmo: key {} white {} gamma {} epsilon {}",
                t.key, white, t.gamma, t.epsilon
            );
        }
        None => {
            let _ = writeln!(out, "tmo: {} opaque bytes", h.tmo_record.len());
        }
    }
    let _ = writeln!(out, "image crc: {:08x}", h.image_crc);
    if !h.header_vars.is_empty() {
        let _ = writeln!(out, "header vars:");
        for line in h.header_vars.split('\n') {
            let _ = writeln!(out, "  {line}");
        }
    }
    let _ = writeln!(
        out,
        "sections: header {} (table {}) base {} exponent {} residual_r {} residual_g {} residual_b {} total {} file {}",
        sizes.header,
        sizes.table,
        sizes.base,
        sizes.exponent,
        sizes.residual[0],
        sizes.residual[1],
        sizes.residual[2],
        sizes.total(),
        bytes.len()
    );
    let rate = bitrate(&stream).map_err(&err)?;
    let _ = writeln!(
        out,
        "bpp: total {:.4} header {:.4} base {:.4} enhancement {:.4} payload_only {:.4}",
        rate.total, rate.header, rate.base, rate.enhancement, rate.payload_only
    );
    let t = &h.table;
    let counts = t.per_channel_counts();
    let _ = writeln!(
        out,
        "regression table: {} entries (R {} G {} B {})",
        t.len(),
        counts[0],
        counts[1],
        counts[2]
    );
    for c in 0..3u8 {
        let entries: Vec<_> = t.entries.iter().filter(|e| e.channel == c).collect();
        if entries.is_empty() {
            continue;
        }
        let range = |f: fn(&&hdrll::estimator::RegressionEntry) -> f32| {
            let lo = entries.iter().map(f).fold(f32::INFINITY, f32::min);
            let hi = entries.iter().map(f).fold(f32::NEG_INFINITY, f32::max);
            (lo, hi)
        };
        let (alo, ahi) = range(|e| e.a);
        let (blo, bhi) = range(|e| e.b);
        let _ = writeln!(
            out,
            "  {}: a in [{alo:.4}, {ahi:.4}] b in [{blo:.4}, {bhi:.4}]",
            ["R", "G", "B"][c as usize]
        );
    }
    match &stream.enhancement {
        Some(enh) => {
            let (w, hh) = (h.width as usize, h.height as usize);
            let plane = lossless_decode(&enh.e_payload, h.lossless, w, hh, "exponent payload").map_err(&err)?;
            let _ = writeln!(out, "{}", histogram(&plane.samples));
        }
        None => {
            let _ = writeln!(out, "enhancement layer: absent (SDR only)");
        }
    }
    Ok(out)
}

fn inspect_hdr(path: &Path, bytes: &[u8]) -> Result<String, Failure> {
    let img = parse_hdr(bytes).map_err(codec_err(path))?;
    let mut out = String::new();
    let _ = writeln!(out, "format: Radiance RGBE");
    let (major, minor) = img.orientation.labels();
    let _ = writeln!(
        out,
        "size: {}x{} resolution line {major} {} {minor} {}",
        img.width, img.height, img.height, img.width
    );
    let _ = writeln!(out, "header vars:");
    for line in img.header_text().split('\n') {
        let _ = writeln!(out, "  {line}");
    }
    let exponent: Vec<u8> = img.pixels.iter().map(|p| p[3]).collect();
    let _ = writeln!(out, "{}", histogram(&exponent));
    Ok(out)
}

fn cmd_inspect(a: InspectArgs) -> CmdResult {
    let bytes = read(&a.input)?;
    let text = if bytes.starts_with(&MAGIC) {
        inspect_hll(&a.input, &bytes)?
    } else {
        inspect_hdr(&a.input, &bytes)?
    };
    print!("{text}");
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CmdResult {
    let paths = synth::write_corpus(&a.out, a.seed, a.size as usize, a.count)
        .map_err(|e| Failure::runtime(format!("{}: {e}", a.out.display())))?;
    println!("wrote {} images to {}", paths.len(), a.out.display());
    Ok(())
}

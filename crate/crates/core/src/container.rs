//! The `HDLL` dual-layer stream and the end-to-end pipelines.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "HDLL" | version u8 | width u32 | height u32 | flags u8
//! lossy id u8 | quality u8 | lossless id u8 | sigma_milli u16
//! tmo_len u16 | tmo record
//! entry_count u16 | entries (channel u8, exponent u8, a f32, b f32, count u32)
//! header_len u32 | header text (UTF-8, lines joined by '\n')
//! orientation u8 | image_crc u32 | header_crc u32
//! base payload
//! [ exponent payload | R residual | G residual | B residual ]
//! ```
//!
//! Each payload carries its own length, coder id and CRC (see [`crate::codec`]).
//! `image_crc` is the CRC-32 of the original RGBE quadruples and
//! `header_crc` covers every header byte before it. The bracketed
//! enhancement layer may be absent, in which case only the SDR image can be
//! decoded.

use std::time::{Duration, Instant};

use crate::codec::{
    crc32, framed_len, lossless_decode, lossless_encode, lossy_decode, lossy_encode, LosslessCoderSpec, LossyCoderSpec,
    Plane8,
};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_mantissa, fit_slrme, gaussian_prefilter, RegionMode, RegressionEntry, RegressionTable,
};
use crate::radiance::{split_planes, HdrPlanes, Orientation, RadianceImage};
use crate::rgbe::image_to_floats;
use crate::tonemap::{tone_map, SdrImage, TmoParams};

pub const MAGIC: [u8; 4] = *b"HDLL";
pub const VERSION: u8 = 1;

pub const FLAG_SLRME: u8 = 1;
pub const FLAG_GLOBAL: u8 = 2;
const KNOWN_FLAGS: u8 = FLAG_SLRME | FLAG_GLOBAL;

const ENTRY_LEN: usize = 14;

/// Mantissa estimator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `M* = S`, no regression table.
    NoSlrme,
    /// One regression per (channel, exponent).
    Slrme,
    /// One regression per channel over the whole image.
    GlobalSlrme,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NoSlrme, Mode::Slrme, Mode::GlobalSlrme];

    pub fn name(self) -> &'static str {
        match self {
            Mode::NoSlrme => "no-slrme",
            Mode::Slrme => "slrme",
            Mode::GlobalSlrme => "global-slrme",
        }
    }

    fn region_mode(self) -> Option<RegionMode> {
        match self {
            Mode::NoSlrme => None,
            Mode::Slrme => Some(RegionMode::PerExponent),
            Mode::GlobalSlrme => Some(RegionMode::Global),
        }
    }

    fn flags(self) -> u8 {
        match self {
            Mode::NoSlrme => 0,
            Mode::Slrme => FLAG_SLRME,
            Mode::GlobalSlrme => FLAG_SLRME | FLAG_GLOBAL,
        }
    }

    fn from_flags(flags: u8) -> Result<Self> {
        match flags {
            0 => Ok(Mode::NoSlrme),
            FLAG_SLRME => Ok(Mode::Slrme),
            f if f == FLAG_SLRME | FLAG_GLOBAL => Ok(Mode::GlobalSlrme),
            _ => Err(Error::CorruptPayload("invalid flags")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected no-slrme, slrme or global-slrme)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeConfig {
    pub mode: Mode,
    pub sigma: f64,
    pub lossy: LossyCoderSpec,
    pub lossless: LosslessCoderSpec,
    pub tmo: TmoParams,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Slrme,
            sigma: 1.0,
            lossy: LossyCoderSpec::default(),
            lossless: LosslessCoderSpec::default(),
            tmo: TmoParams::default(),
        }
    }
}

impl EncodeConfig {
    /// Sigma in the milli-units the stream carries.
    pub fn sigma_milli(&self) -> Result<u16> {
        let m = (self.sigma * 1000.0).round();
        if !m.is_finite() || !(0.0..=u16::MAX as f64).contains(&m) {
            return Err(Error::InvalidParameter("sigma must be in [0, 65.535]"));
        }
        Ok(m as u16)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub version: u8,
    pub width: u32,
    pub height: u32,
    pub mode: Mode,
    pub lossy: LossyCoderSpec,
    pub lossless: LosslessCoderSpec,
    pub sigma_milli: u16,
    pub tmo_record: Vec<u8>,
    pub table: RegressionTable,
    pub header_vars: String,
    pub orientation: Orientation,
    pub image_crc: u32,
}

impl StreamHeader {
    pub fn sigma(&self) -> f64 {
        self.sigma_milli as f64 / 1000.0
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enhancement {
    pub e_payload: Vec<u8>,
    /// R, G, B.
    pub residual_payloads: [Vec<u8>; 3],
}

impl Enhancement {
    pub fn byte_len(&self) -> usize {
        self.e_payload.len() + self.residual_payloads.iter().map(Vec::len).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualLayerStream {
    pub header: StreamHeader,
    pub base_payload: Vec<u8>,
    pub enhancement: Option<Enhancement>,
}

/// Wall-clock time of each encoder stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub tone_map: Duration,
    pub base_layer: Duration,
    pub prefilter: Duration,
    pub fit: Duration,
    pub estimate: Duration,
    pub enhancement: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeReport {
    pub timings: StageTimings,
    /// CRC-32 of the R, G, B estimate planes.
    pub mstar_digest: u32,
    /// CRC-32 of the decoded base image, planar.
    pub sdr_digest: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeReport {
    pub mstar_digest: u32,
}

fn digest_planes(planes: &[Vec<u8>; 3]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for p in planes {
        h.update(p);
    }
    h.finalize()
}

pub fn encode(hdr: &RadianceImage, config: &EncodeConfig) -> Result<DualLayerStream> {
    encode_with_report(hdr, config).map(|(s, _)| s)
}

pub fn encode_with_report(hdr: &RadianceImage, config: &EncodeConfig) -> Result<(DualLayerStream, EncodeReport)> {
    let t0 = Instant::now();
    hdr.validate()?;
    if hdr.width == 0 || hdr.height == 0 {
        return Err(Error::EmptyImage);
    }
    let width = u32::try_from(hdr.width).map_err(|_| Error::InvalidParameter("width exceeds u32"))?;
    let height = u32::try_from(hdr.height).map_err(|_| Error::InvalidParameter("height exceeds u32"))?;
    if u32::try_from(hdr.pixels.len()).is_err() {
        return Err(Error::InvalidParameter("pixel count exceeds u32"));
    }
    config.lossy.validate()?;
    crate::codec::lossless_coder(config.lossless.coder_id)?;
    config.tmo.validate()?;
    let sigma_milli = config.sigma_milli()?;
    let (w, h) = (hdr.width, hdr.height);
    let mut timings = StageTimings::default();

    let planes = split_planes(hdr);

    let t = Instant::now();
    let sdr = tone_map(&image_to_floats(hdr), w, h, &config.tmo)?;
    timings.tone_map = t.elapsed();

    // From here on only the decoded base image is used.
    let t = Instant::now();
    let base_payload = lossy_encode(&sdr, config.lossy)?;
    let s = lossy_decode(&base_payload, config.lossy, w, h)?;
    timings.base_layer = t.elapsed();

    let (table, m_star) = match config.mode.region_mode() {
        None => (RegressionTable::default(), s.planes.clone()),
        Some(region) => {
            let t = Instant::now();
            let s_star = gaussian_prefilter(&s, sigma_milli as f64 / 1000.0)?;
            timings.prefilter = t.elapsed();
            let t = Instant::now();
            let table = fit_slrme(&planes, &s_star, region)?;
            timings.fit = t.elapsed();
            let t = Instant::now();
            let m_star = estimate_mantissa(&s_star, &planes.exponent, &table)?;
            timings.estimate = t.elapsed();
            (table, m_star)
        }
    };

    let t = Instant::now();
    let enhancement = encode_enhancement(&planes, &m_star, config.lossless)?;
    timings.enhancement = t.elapsed();

    let stream = DualLayerStream {
        header: StreamHeader {
            version: VERSION,
            width,
            height,
            mode: config.mode,
            lossy: config.lossy,
            lossless: config.lossless,
            sigma_milli,
            tmo_record: config.tmo.to_bytes(),
            table,
            header_vars: hdr.header_text(),
            orientation: hdr.orientation,
            image_crc: crc32(&hdr.pixel_bytes()),
        },
        base_payload,
        enhancement: Some(enhancement),
    };
    timings.total = t0.elapsed();
    let report = EncodeReport {
        timings,
        mstar_digest: digest_planes(&m_star),
        sdr_digest: crc32(&s.planar_bytes()),
    };
    Ok((stream, report))
}

fn encode_enhancement(planes: &HdrPlanes, m_star: &[Vec<u8>; 3], spec: LosslessCoderSpec) -> Result<Enhancement> {
    let (w, h) = (planes.width, planes.height);
    let residual = |c: usize| -> Plane8 {
        let samples = planes.mantissa[c]
            .iter()
            .zip(&m_star[c])
            .map(|(&m, &e)| m.wrapping_sub(e))
            .collect();
        Plane8 {
            width: w,
            height: h,
            samples,
        }
    };
    let exponent = Plane8 {
        width: w,
        height: h,
        samples: planes.exponent.clone(),
    };
    let [e, r, g, b] = std::thread::scope(|scope| {
        let exp = scope.spawn(|| lossless_encode(&exponent, spec));
        let res = [0, 1, 2].map(|c| scope.spawn(move || lossless_encode(&residual(c), spec)));
        let [r, g, b] = res.map(|j| j.join().expect("residual coder panicked"));
        [exp.join().expect("exponent coder panicked"), r, g, b]
    });
    Ok(Enhancement {
        e_payload: e?,
        residual_payloads: [r?, g?, b?],
    })
}

/// The base-layer image. Never looks at the enhancement layer.
pub fn decode_sdr(stream: &DualLayerStream) -> Result<SdrImage> {
    let h = &stream.header;
    lossy_decode(&stream.base_payload, h.lossy, h.width as usize, h.height as usize)
}

pub fn decode_hdr(stream: &DualLayerStream) -> Result<RadianceImage> {
    decode_hdr_with_report(stream).map(|(img, _)| img)
}

pub fn decode_hdr_with_report(stream: &DualLayerStream) -> Result<(RadianceImage, DecodeReport)> {
    let hd = &stream.header;
    let enh = stream.enhancement.as_ref().ok_or(Error::MissingEnhancement)?;
    let (w, h) = (hd.width as usize, hd.height as usize);
    let s = decode_sdr(stream)?;

    let (exponent, residuals) = std::thread::scope(|scope| {
        let exp = scope.spawn(|| lossless_decode(&enh.e_payload, hd.lossless, w, h, "exponent payload"));
        let names = ["R residual payload", "G residual payload", "B residual payload"];
        let res = [0, 1, 2].map(|c| {
            let payload = &enh.residual_payloads[c];
            scope.spawn(move || lossless_decode(payload, hd.lossless, w, h, names[c]))
        });
        let res = res.map(|j| j.join().expect("lossless decoder panicked"));
        (exp.join().expect("lossless decoder panicked"), res)
    });
    let exponent = exponent?.samples;
    let [r, g, b] = residuals;
    let residuals = [r?.samples, g?.samples, b?.samples];

    let m_star = if hd.mode == Mode::NoSlrme {
        s.planes
    } else {
        let s_star = gaussian_prefilter(&s, hd.sigma())?;
        estimate_mantissa(&s_star, &exponent, &hd.table)?
    };
    let report = DecodeReport {
        mstar_digest: digest_planes(&m_star),
    };

    let mantissa = [0, 1, 2].map(|c| {
        m_star[c]
            .iter()
            .zip(&residuals[c])
            .map(|(&e, &r)| e.wrapping_add(r))
            .collect::<Vec<u8>>()
    });
    let planes = HdrPlanes {
        width: w,
        height: h,
        mantissa,
        exponent,
    };
    let mut img = planes.merge()?;
    img.set_header_text(&hd.header_vars);
    img.orientation = hd.orientation;
    if crc32(&img.pixel_bytes()) != hd.image_crc {
        return Err(Error::Checksum("reconstructed image"));
    }
    Ok((img, report))
}

/// Byte reader that remembers how far it has read.
#[derive(Debug)]
pub struct TrackingReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> TrackingReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    /// Bytes consumed so far.
    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn take(&mut self, n: usize, section: &'static str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Overrun(section));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, section: &'static str) -> Result<[u8; N]> {
        Ok(self.take(N, section)?.try_into().unwrap())
    }

    fn u8(&mut self, section: &'static str) -> Result<u8> {
        Ok(self.array::<1>(section)?[0])
    }

    fn u16(&mut self, section: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(section)?))
    }

    fn u32(&mut self, section: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(section)?))
    }

    fn f32(&mut self, section: &'static str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array(section)?))
    }

    /// One framed payload, returned whole (frame header included).
    fn payload(&mut self, section: &'static str) -> Result<&'a [u8]> {
        let len = framed_len(&self.data[self.pos..]).map_err(|_| Error::Overrun(section))?;
        self.take(len, section)
    }
}

pub fn serialize_header(h: &StreamHeader) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(64 + h.header_vars.len() + h.table.len() * ENTRY_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(h.version);
    out.extend_from_slice(&h.width.to_le_bytes());
    out.extend_from_slice(&h.height.to_le_bytes());
    out.push(h.mode.flags());
    out.push(h.lossy.coder_id);
    out.push(h.lossy.quality);
    out.push(h.lossless.coder_id);
    out.extend_from_slice(&h.sigma_milli.to_le_bytes());

    let tmo_len = u16::try_from(h.tmo_record.len()).map_err(|_| Error::InvalidParameter("tmo record too long"))?;
    out.extend_from_slice(&tmo_len.to_le_bytes());
    out.extend_from_slice(&h.tmo_record);

    let mut entries = h.table.entries.clone();
    entries.sort_by_key(|e| (e.channel, e.exponent));
    let count = u16::try_from(entries.len()).map_err(|_| Error::InvalidParameter("regression table too long"))?;
    out.extend_from_slice(&count.to_le_bytes());
    for e in &entries {
        out.push(e.channel);
        out.push(e.exponent);
        out.extend_from_slice(&e.a.to_le_bytes());
        out.extend_from_slice(&e.b.to_le_bytes());
        out.extend_from_slice(&e.count.to_le_bytes());
    }

    let text = h.header_vars.as_bytes();
    let text_len = u32::try_from(text.len()).map_err(|_| Error::InvalidParameter("header text too long"))?;
    out.extend_from_slice(&text_len.to_le_bytes());
    out.extend_from_slice(text);
    out.push(h.orientation as u8);
    out.extend_from_slice(&h.image_crc.to_le_bytes());
    let crc = crc32(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn serialize(stream: &DualLayerStream) -> Result<Vec<u8>> {
    let mut out = serialize_header(&stream.header)?;
    out.extend_from_slice(&stream.base_payload);
    if let Some(enh) = &stream.enhancement {
        out.extend_from_slice(&enh.e_payload);
        for p in &enh.residual_payloads {
            out.extend_from_slice(p);
        }
    }
    Ok(out)
}

fn read_header(r: &mut TrackingReader<'_>) -> Result<StreamHeader> {
    let start = r.consumed();
    if r.array::<4>("magic")? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let width = r.u32("width")?;
    let height = r.u32("height")?;
    let flags = r.u8("flags")?;
    let lossy = LossyCoderSpec {
        coder_id: r.u8("lossy coder")?,
        quality: r.u8("quality")?,
    };
    let lossless = LosslessCoderSpec {
        coder_id: r.u8("lossless coder")?,
    };
    let sigma_milli = r.u16("sigma")?;
    let tmo_len = r.u16("tmo record")? as usize;
    let tmo_record = r.take(tmo_len, "tmo record")?.to_vec();

    let count = r.u16("regression table")? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        entries.push(RegressionEntry {
            channel: r.u8("regression table")?,
            exponent: r.u8("regression table")?,
            a: r.f32("regression table")?,
            b: r.f32("regression table")?,
            count: r.u32("regression table")?,
        });
    }
    let text_len = r.u32("header text")? as usize;
    let header_vars = std::str::from_utf8(r.take(text_len, "header text")?)
        .map_err(|_| Error::CorruptPayload("header text is not UTF-8"))?
        .to_owned();
    let orientation = r.u8("orientation")?;
    let image_crc = r.u32("image checksum")?;
    let covered = crc32(&r.data[start..r.consumed()]);
    if r.u32("header checksum")? != covered {
        return Err(Error::Checksum("stream header"));
    }

    // Semantic checks come after the checksum so corruption reports as such.
    if flags & !KNOWN_FLAGS != 0 {
        return Err(Error::CorruptPayload("unknown flag bits"));
    }
    let mode = Mode::from_flags(flags)?;
    let orientation = Orientation::from_u8(orientation).ok_or(Error::CorruptPayload("orientation"))?;
    lossy.validate()?;
    crate::codec::lossless_coder(lossless.coder_id)?;
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    if (mode == Mode::NoSlrme) != entries.is_empty() {
        return Err(Error::CorruptPayload("SLRME flag disagrees with regression table"));
    }
    let sorted = entries
        .windows(2)
        .all(|p| (p[0].channel, p[0].exponent) < (p[1].channel, p[1].exponent));
    if !sorted || entries.iter().any(|e| e.channel > 2) {
        return Err(Error::CorruptPayload("regression table order"));
    }
    if mode == Mode::GlobalSlrme && entries.iter().any(|e| e.exponent != 0) {
        return Err(Error::CorruptPayload("global regression entry with nonzero exponent"));
    }
    let region = match mode {
        Mode::GlobalSlrme => RegionMode::Global,
        _ => RegionMode::PerExponent,
    };
    Ok(StreamHeader {
        version,
        width,
        height,
        mode,
        lossy,
        lossless,
        sigma_milli,
        tmo_record,
        table: RegressionTable { mode: region, entries },
        header_vars,
        orientation,
        image_crc,
    })
}

/// Parse a full stream. A stream that ends right after the base payload
/// deserializes with `enhancement: None`; a partial enhancement layer is an
/// error (use [`decode_sdr_bytes`] for those).
pub fn deserialize(bytes: &[u8]) -> Result<DualLayerStream> {
    let mut r = TrackingReader::new(bytes);
    let header = read_header(&mut r)?;
    let base_payload = r.payload("base payload")?.to_vec();
    let enhancement = if r.remaining() == 0 {
        None
    } else {
        let e_payload = r.payload("exponent payload")?.to_vec();
        let residual_payloads = [
            r.payload("R residual payload")?.to_vec(),
            r.payload("G residual payload")?.to_vec(),
            r.payload("B residual payload")?.to_vec(),
        ];
        Some(Enhancement {
            e_payload,
            residual_payloads,
        })
    };
    if r.remaining() != 0 {
        return Err(Error::CorruptPayload("trailing bytes after stream"));
    }
    Ok(DualLayerStream {
        header,
        base_payload,
        enhancement,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrDecode {
    pub header: StreamHeader,
    pub image: SdrImage,
    /// Bytes read from the input: header plus base payload, nothing more.
    pub bytes_read: usize,
}

/// Decode only the base layer straight from bytes. Anything after the base
/// payload, complete, truncated or missing, is never read.
pub fn decode_sdr_bytes(bytes: &[u8]) -> Result<SdrDecode> {
    let mut r = TrackingReader::new(bytes);
    let header = read_header(&mut r)?;
    let base = r.payload("base payload")?;
    let image = lossy_decode(base, header.lossy, header.width as usize, header.height as usize)?;
    Ok(SdrDecode {
        header,
        image,
        bytes_read: r.consumed(),
    })
}

/// Byte sizes of every serialized section, in stream order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionSizes {
    pub header: usize,
    /// Part of `header` taken by the regression table, count prefix included.
    pub table: usize,
    pub base: usize,
    pub exponent: usize,
    pub residual: [usize; 3],
}

impl SectionSizes {
    pub fn enhancement(&self) -> usize {
        self.exponent + self.residual.iter().sum::<usize>()
    }

    pub fn total(&self) -> usize {
        self.header + self.base + self.enhancement()
    }
}

pub fn section_sizes(stream: &DualLayerStream) -> Result<SectionSizes> {
    let enh = stream.enhancement.as_ref();
    Ok(SectionSizes {
        header: serialize_header(&stream.header)?.len(),
        table: 2 + ENTRY_LEN * stream.header.table.len(),
        base: stream.base_payload.len(),
        exponent: enh.map_or(0, |e| e.e_payload.len()),
        residual: enh.map_or([0; 3], |e| e.residual_payloads.clone().map(|p| p.len())),
    })
}

/// Bits per pixel, overall and per section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bitrate {
    /// Everything, container header included.
    pub total: f64,
    pub header: f64,
    pub base: f64,
    pub enhancement: f64,
    /// Base plus enhancement payloads only: the side information in the
    /// header (regression table, TMO record, header text) is left out.
    pub payload_only: f64,
}

pub fn bitrate(stream: &DualLayerStream) -> Result<Bitrate> {
    let s = section_sizes(stream)?;
    let n = stream.header.pixel_count() as f64;
    let bpp = |bytes: usize| bytes as f64 * 8.0 / n;
    Ok(Bitrate {
        total: bpp(s.total()),
        header: bpp(s.header),
        base: bpp(s.base),
        enhancement: bpp(s.enhancement()),
        payload_only: bpp(s.base + s.enhancement()),
    })
}

/// Total serialized bits divided by pixel count.
pub fn bitrate_bpp(stream: &DualLayerStream) -> Result<f64> {
    bitrate(stream).map(|b| b.total)
}

/// `bytes * 8 / (width * height)`.
pub fn bpp_of(bytes: usize, width: usize, height: usize) -> f64 {
    bytes as f64 * 8.0 / (width * height) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::fit_region;
    use crate::radiance::HeaderLine;
    use crate::rgbe::{float_to_rgbe, FloatPixel};

    /// Radial gradient spanning several exponents.
    fn gradient(w: usize, h: usize) -> RadianceImage {
        let pixels = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                let d = ((x - w as f64 / 2.0).powi(2) + (y - h as f64 / 2.0).powi(2)).sqrt();
                let v = 2f64.powf(4.0 - d / 3.0);
                float_to_rgbe(FloatPixel::new(v, v * 0.6, v * 0.3)).unwrap().into()
            })
            .collect();
        let mut img = RadianceImage::new(w, h, pixels).unwrap();
        img.header.push(HeaderLine::var("EXPOSURE", "2.0"));
        img
    }

    fn config(mode: Mode) -> EncodeConfig {
        EncodeConfig {
            mode,
            ..EncodeConfig::default()
        }
    }

    #[test]
    fn round_trip_all_modes() {
        let img = gradient(21, 13);
        for mode in Mode::ALL {
            for q in [1, 30, 85, 100] {
                for sigma in [0.0, 0.5, 1.0, 2.0] {
                    let cfg = EncodeConfig {
                        mode,
                        sigma,
                        lossy: LossyCoderSpec {
                            coder_id: 1,
                            quality: q,
                        },
                        ..EncodeConfig::default()
                    };
                    let s = encode(&img, &cfg).unwrap();
                    assert_eq!(decode_hdr(&s).unwrap(), img, "{mode} q{q} sigma{sigma}");
                }
            }
        }
    }

    #[test]
    fn coder_swaps_keep_round_trip() {
        let img = gradient(17, 9);
        for lossy in [0, 1] {
            for lossless in [0, 1] {
                let cfg = EncodeConfig {
                    lossy: LossyCoderSpec {
                        coder_id: lossy,
                        quality: 85,
                    },
                    lossless: LosslessCoderSpec { coder_id: lossless },
                    ..EncodeConfig::default()
                };
                let bytes = serialize(&encode(&img, &cfg).unwrap()).unwrap();
                assert_eq!(decode_hdr(&deserialize(&bytes).unwrap()).unwrap(), img);
            }
        }
    }

    #[test]
    fn empty_image_rejected() {
        let img = RadianceImage::new(0, 0, vec![]).unwrap();
        assert_eq!(encode(&img, &EncodeConfig::default()), Err(Error::EmptyImage));
    }

    #[test]
    fn mod_wrap_residual() {
        let (m, m_star) = (10u8, 250u8);
        let r = m.wrapping_sub(m_star);
        assert_eq!(r, 16);
        assert_eq!(m_star.wrapping_add(r), m);
    }

    #[test]
    fn table_section_size() {
        let mut s = encode(&gradient(8, 8), &config(Mode::Slrme)).unwrap();
        s.header.table.entries = (0..69)
            .map(|i| RegressionEntry {
                channel: (i / 23) as u8,
                exponent: (100 + i % 23) as u8,
                a: 1.0,
                b: 0.0,
                count: 1,
            })
            .collect();
        let sizes = section_sizes(&s).unwrap();
        assert_eq!(sizes.table, 69 * 14 + 2);
        let with = serialize_header(&s.header).unwrap().len();
        s.header.table.entries.truncate(1);
        assert_eq!(with - serialize_header(&s.header).unwrap().len(), 68 * 14);
    }

    #[test]
    fn serialize_is_inverse_of_deserialize() {
        for mode in Mode::ALL {
            let s = encode(&gradient(12, 12), &config(mode)).unwrap();
            let bytes = serialize(&s).unwrap();
            let back = deserialize(&bytes).unwrap();
            assert_eq!(back, s);
            assert_eq!(serialize(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = serialize(&encode(&gradient(4, 4), &config(Mode::Slrme)).unwrap()).unwrap();
        let good = bytes.clone();
        bytes[..4].copy_from_slice(b"XXXX");
        assert_eq!(deserialize(&bytes), Err(Error::BadMagic));
        let mut bytes = good.clone();
        bytes[4] = 9;
        assert_eq!(deserialize(&bytes), Err(Error::UnsupportedVersion(9)));
        assert!(matches!(deserialize(&good[..10]), Err(Error::Overrun(_))));
    }

    #[test]
    fn every_byte_flip_is_an_error() {
        let img = gradient(10, 7);
        let bytes = serialize(&encode(&img, &config(Mode::Slrme)).unwrap()).unwrap();
        for i in 0..bytes.len() {
            for mask in [0x01, 0x80] {
                let mut bad = bytes.clone();
                bad[i] ^= mask;
                let out = deserialize(&bad).and_then(|s| decode_hdr(&s));
                assert!(out.is_err(), "flip {mask:#x} at byte {i} decoded silently");
            }
        }
    }

    #[test]
    fn sdr_only_from_truncated_stream() {
        let img = gradient(16, 16);
        let (s, report) = encode_with_report(&img, &config(Mode::Slrme)).unwrap();
        let bytes = serialize(&s).unwrap();
        let header_and_base = serialize_header(&s.header).unwrap().len() + s.base_payload.len();
        for cut in [header_and_base, header_and_base + 1, header_and_base + 20, bytes.len()] {
            let d = decode_sdr_bytes(&bytes[..cut]).unwrap();
            assert_eq!(d.bytes_read, header_and_base);
            assert_eq!(crc32(&d.image.planar_bytes()), report.sdr_digest);
        }
        let sdr_only = deserialize(&bytes[..header_and_base]).unwrap();
        assert!(sdr_only.enhancement.is_none());
        assert_eq!(decode_hdr(&sdr_only), Err(Error::MissingEnhancement));
        assert!(deserialize(&bytes[..header_and_base + 5]).is_err());
        let b = bitrate(&sdr_only).unwrap();
        assert_eq!(b.enhancement, 0.0);
        assert!((b.total - b.header - b.base).abs() < 1e-12);
    }

    #[test]
    fn decoder_estimate_matches_encoder() {
        let img = gradient(19, 23);
        for mode in Mode::ALL {
            let (s, enc) = encode_with_report(&img, &config(mode)).unwrap();
            let (_, dec) = decode_hdr_with_report(&s).unwrap();
            assert_eq!(enc.mstar_digest, dec.mstar_digest, "{mode}");
        }
    }

    #[test]
    fn no_slrme_has_empty_table_and_slrme_covers_exponents() {
        let img = gradient(24, 24);
        let s = encode(&img, &config(Mode::NoSlrme)).unwrap();
        assert!(s.header.table.is_empty());
        let s = encode(&img, &config(Mode::Slrme)).unwrap();
        let distinct: std::collections::BTreeSet<u8> = img.pixels.iter().map(|p| p[3]).collect();
        assert!(distinct.len() >= 6);
        assert_eq!(s.header.table.len(), 3 * distinct.len());
    }

    #[test]
    fn global_mode_equals_whole_plane_fit() {
        let img = gradient(20, 20);
        let cfg = config(Mode::GlobalSlrme);
        let s = encode(&img, &cfg).unwrap();
        assert_eq!(s.header.table.len(), 3);
        let sdr = decode_sdr(&s).unwrap();
        let s_star = gaussian_prefilter(&sdr, 1.0).unwrap();
        let planes = split_planes(&img);
        for e in &s.header.table.entries {
            let c = e.channel as usize;
            let (a, b) = fit_region(&s_star.planes[c], &planes.mantissa[c]).unwrap();
            assert_eq!((e.a, e.b, e.count), (a as f32, b as f32, 400));
        }
    }

    #[test]
    fn bpp_arithmetic() {
        assert_eq!(bpp_of(3_110_400, 1920, 1080), 12.0);
        let s = encode(&gradient(16, 16), &config(Mode::Slrme)).unwrap();
        let b = bitrate(&s).unwrap();
        let total_bytes = serialize(&s).unwrap().len();
        assert_eq!(b.total, bpp_of(total_bytes, 16, 16));
        assert!((b.header + b.base + b.enhancement - b.total).abs() < 1e-12);
        assert!(b.payload_only < b.total);
    }

    #[test]
    fn sigma_quantized_to_milli() {
        let cfg = EncodeConfig {
            sigma: 1.2344,
            ..EncodeConfig::default()
        };
        assert_eq!(cfg.sigma_milli().unwrap(), 1234);
        let s = encode(&gradient(9, 9), &cfg).unwrap();
        assert_eq!(decode_hdr(&s).unwrap(), gradient(9, 9));
        assert!(EncodeConfig {
            sigma: -1.0,
            ..cfg.clone()
        }
        .sigma_milli()
        .is_err());
        assert!(EncodeConfig { sigma: 70.0, ..cfg }.sigma_milli().is_err());
    }

    #[test]
    fn mode_names_parse() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("fast".parse::<Mode>().is_err());
    }
}

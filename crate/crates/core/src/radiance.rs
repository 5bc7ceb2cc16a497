//! Radiance `.hdr` (RGBE) file reading and writing.
//!
//! Pixels are kept as raw `(r, g, b, e)` byte quadruples in file order, so a
//! parse followed by a write reproduces the same pixel data. Flat, old-style
//! run-length (`1 1 1 n` markers) and new-style per-component run-length
//! scanlines are all accepted on read; the writer emits new-style RLE.

use crate::error::{Error, Result};

/// The only pixel format this crate interprets.
pub const FORMAT_RGBE: &str = "32-bit_rle_rgbe";

const MIN_RLE_WIDTH: usize = 8;
const MAX_RLE_WIDTH: usize = 0x7fff;
const MIN_RUN: usize = 4;

/// One line of the text header.
///
/// `KEY=VALUE` lines are split at the first `=` with no trimming; any other
/// line (comments, tool banners) is kept whole in `key` with `value` unset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderLine {
    pub key: String,
    pub value: Option<String>,
}

impl HeaderLine {
    pub fn var(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            value: Some(value.into()),
        }
    }

    fn parse(line: &str) -> Self {
        match line.split_once('=') {
            Some((k, v)) => Self::var(k, v),
            None => Self {
                key: line.to_owned(),
                value: None,
            },
        }
    }

    fn render(&self) -> String {
        match &self.value {
            Some(v) => format!("{}={}", self.key, v),
            None => self.key.clone(),
        }
    }
}

/// Axis order of the resolution line.
///
/// The first label names the scanline axis (outer loop), the second the
/// axis that runs along each scanline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Orientation {
    /// `-Y H +X W`, the standard top-to-bottom, left-to-right raster.
    #[default]
    NegYPosX = 0,
    NegYNegX = 1,
    PosYNegX = 2,
    PosYPosX = 3,
    PosXNegY = 4,
    PosXPosY = 5,
    NegXNegY = 6,
    NegXPosY = 7,
}

impl Orientation {
    const ALL: [Orientation; 8] = [
        Orientation::NegYPosX,
        Orientation::NegYNegX,
        Orientation::PosYNegX,
        Orientation::PosYPosX,
        Orientation::PosXNegY,
        Orientation::PosXPosY,
        Orientation::NegXNegY,
        Orientation::NegXPosY,
    ];

    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Orientation::NegYPosX => ("-Y", "+X"),
            Orientation::NegYNegX => ("-Y", "-X"),
            Orientation::PosYNegX => ("+Y", "-X"),
            Orientation::PosYPosX => ("+Y", "+X"),
            Orientation::PosXNegY => ("+X", "-Y"),
            Orientation::PosXPosY => ("+X", "+Y"),
            Orientation::NegXNegY => ("-X", "-Y"),
            Orientation::NegXPosY => ("-X", "+Y"),
        }
    }

    pub fn from_labels(major: &str, minor: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.labels() == (major, minor))
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }
}

/// A decoded Radiance image.
///
/// `width` is the number of pixels per scanline and `height` the number of
/// scanlines, both in file order. For the standard `-Y H +X W` orientation
/// these are the usual image dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadianceImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 4]>,
    pub header: Vec<HeaderLine>,
    pub orientation: Orientation,
}

impl RadianceImage {
    /// New image with a `FORMAT=32-bit_rle_rgbe` header and standard orientation.
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 4]>) -> Result<Self> {
        let img = Self {
            width,
            height,
            pixels,
            header: vec![HeaderLine::var("FORMAT", FORMAT_RGBE)],
            orientation: Orientation::NegYPosX,
        };
        img.validate()?;
        Ok(img)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.width * self.height;
        if self.pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.pixels.len(),
            });
        }
        if let Some(fmt) = self.header_var("FORMAT") {
            if fmt.trim() != FORMAT_RGBE {
                return Err(Error::UnsupportedFormat(fmt.to_owned()));
            }
        }
        Ok(())
    }

    /// Value of the first header variable named `key`.
    pub fn header_var(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|l| l.key == key)
            .and_then(|l| l.value.as_deref())
    }

    /// Header lines joined by `\n`, as carried inside the container.
    pub fn header_text(&self) -> String {
        self.header
            .iter()
            .map(HeaderLine::render)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn set_header_text(&mut self, text: &str) {
        self.header = if text.is_empty() {
            Vec::new()
        } else {
            text.split('\n').map(HeaderLine::parse).collect()
        };
    }

    /// The pixel quadruples as one contiguous byte slice.
    pub fn pixel_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }
}

/// Mantissa and exponent planes of an RGBE image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HdrPlanes {
    pub width: usize,
    pub height: usize,
    /// R, G, B mantissas.
    pub mantissa: [Vec<u8>; 3],
    pub exponent: Vec<u8>,
}

impl HdrPlanes {
    /// True when every pixel is either the zero pixel or has its largest
    /// mantissa in `[128, 255]`.
    pub fn is_canonical(&self) -> bool {
        (0..self.exponent.len()).all(|i| {
            let m = [self.mantissa[0][i], self.mantissa[1][i], self.mantissa[2][i]];
            let max = m.into_iter().max().unwrap_or(0);
            max >= 128 || (max == 0 && self.exponent[i] == 0)
        })
    }

    /// Reassemble an image. Header lines are left at the defaults of
    /// [`RadianceImage::new`]; callers restore the source header themselves.
    pub fn merge(&self) -> Result<RadianceImage> {
        let n = self.width * self.height;
        for plane in self.mantissa.iter().chain(std::iter::once(&self.exponent)) {
            if plane.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: plane.len(),
                });
            }
        }
        let pixels = (0..n)
            .map(|i| {
                [
                    self.mantissa[0][i],
                    self.mantissa[1][i],
                    self.mantissa[2][i],
                    self.exponent[i],
                ]
            })
            .collect();
        RadianceImage::new(self.width, self.height, pixels)
    }
}

pub fn split_planes(image: &RadianceImage) -> HdrPlanes {
    let mut mantissa: [Vec<u8>; 3] = Default::default();
    for plane in mantissa.iter_mut() {
        plane.reserve_exact(image.pixels.len());
    }
    let mut exponent = Vec::with_capacity(image.pixels.len());
    for px in &image.pixels {
        mantissa[0].push(px[0]);
        mantissa[1].push(px[1]);
        mantissa[2].push(px[2]);
        exponent.push(px[3]);
    }
    HdrPlanes {
        width: image.width,
        height: image.height,
        mantissa,
        exponent,
    }
}

pub fn merge_planes(planes: &HdrPlanes) -> Result<RadianceImage> {
    planes.merge()
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Option<&'a str> {
        let rest = &self.data[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n')?;
        self.pos += end + 1;
        let line = &rest[..end];
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        std::str::from_utf8(line).ok()
    }

    fn remaining(&self) -> &'a [u8] {
        &self.data[self.pos..]
    }
}

/// Parse a complete `.hdr` byte stream.
pub fn parse_hdr(bytes: &[u8]) -> Result<RadianceImage> {
    let mut cur = Cursor { data: bytes, pos: 0 };
    let sig = cur.line().ok_or(Error::BadSignature)?;
    if !(sig.starts_with("#?RADIANCE") || sig.starts_with("#?RGBE")) {
        return Err(Error::BadSignature);
    }

    let mut header = Vec::new();
    loop {
        let line = cur.line().ok_or(Error::TruncatedHeader)?;
        if line.is_empty() {
            break;
        }
        let hl = HeaderLine::parse(line);
        if hl.key == "FORMAT" {
            let fmt = hl.value.as_deref().unwrap_or("").trim();
            if fmt != FORMAT_RGBE {
                return Err(Error::UnsupportedFormat(fmt.to_owned()));
            }
        }
        header.push(hl);
    }

    let res = cur.line().ok_or(Error::TruncatedHeader)?;
    let (orientation, height, width) = parse_resolution(res)?;
    if width == 0 || height == 0 {
        return Err(Error::BadResolution(res.to_owned()));
    }

    let mut pixels = vec![[0u8; 4]; width * height];
    let data = cur.remaining();
    let mut pos = 0;
    for (y, line) in pixels.chunks_exact_mut(width).enumerate() {
        pos = read_scanline(data, pos, line, y)?;
    }

    Ok(RadianceImage {
        width,
        height,
        pixels,
        header,
        orientation,
    })
}

fn parse_resolution(line: &str) -> Result<(Orientation, usize, usize)> {
    let bad = || Error::BadResolution(line.to_owned());
    let tok: Vec<&str> = line.split_whitespace().collect();
    if tok.len() != 4 {
        return Err(bad());
    }
    let orientation = Orientation::from_labels(tok[0], tok[2]).ok_or_else(bad)?;
    let major = tok[1].parse::<usize>().map_err(|_| bad())?;
    let minor = tok[3].parse::<usize>().map_err(|_| bad())?;
    Ok((orientation, major, minor))
}

fn read_scanline(data: &[u8], mut pos: usize, out: &mut [[u8; 4]], y: usize) -> Result<usize> {
    let width = out.len();
    let head = data.get(pos..pos + 4);
    if let Some(&[2, 2, hi, lo]) = head {
        let len = ((hi as usize) << 8) | lo as usize;
        if (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width) && hi & 0x80 == 0 && len == width {
            return read_new_rle(data, pos + 4, out, y);
        }
    }

    // Flat pixels, possibly with old-style `1 1 1 n` repeat markers.
    let mut x = 0;
    let mut shift = 0u32;
    while x < width {
        let px: [u8; 4] = data
            .get(pos..pos + 4)
            .ok_or(Error::TruncatedScanline(y))?
            .try_into()
            .unwrap();
        pos += 4;
        if px[0] == 1 && px[1] == 1 && px[2] == 1 {
            if x == 0 {
                return Err(Error::LeadingRunMarker(y));
            }
            let count = if px[3] == 0 {
                0
            } else if shift >= 32 {
                return Err(Error::RunOverflow(y));
            } else {
                (px[3] as usize) << shift
            };
            if x + count > width {
                return Err(Error::RunOverflow(y));
            }
            let prev = out[x - 1];
            out[x..x + count].fill(prev);
            x += count;
            shift += 8;
        } else {
            out[x] = px;
            x += 1;
            shift = 0;
        }
    }
    Ok(pos)
}

fn read_new_rle(data: &[u8], mut pos: usize, out: &mut [[u8; 4]], y: usize) -> Result<usize> {
    let width = out.len();
    let mut next = || -> Result<u8> {
        let b = *data.get(pos).ok_or(Error::TruncatedScanline(y))?;
        pos += 1;
        Ok(b)
    };
    for c in 0..4 {
        let mut x = 0;
        while x < width {
            let code = next()? as usize;
            if code > 128 {
                let run = code - 128;
                if x + run > width {
                    return Err(Error::RunOverflow(y));
                }
                let v = next()?;
                for px in &mut out[x..x + run] {
                    px[c] = v;
                }
                x += run;
            } else {
                if code == 0 {
                    return Err(Error::ZeroRun(y));
                }
                if x + code > width {
                    return Err(Error::RunOverflow(y));
                }
                for px in &mut out[x..x + code] {
                    px[c] = next()?;
                }
                x += code;
            }
        }
    }
    Ok(pos)
}

/// Serialize an image. With `rle` set, scanlines of width 8..=32767 use
/// new-style run-length encoding; other widths are always flat.
///
/// A flat scanline cannot hold a pixel whose mantissas are all 1 (it would
/// read back as a repeat marker). Such scanlines fall back to RLE when the
/// width allows it and fail with [`Error::Unrepresentable`] otherwise.
pub fn write_hdr(image: &RadianceImage, rle: bool) -> Result<Vec<u8>> {
    if image.width == 0 || image.height == 0 {
        return Err(Error::EmptyImage);
    }
    image.validate()?;
    let mut out = Vec::with_capacity(64 + image.pixels.len() * 4);
    out.extend_from_slice(b"#?RADIANCE\n");
    for line in &image.header {
        let text = line.render();
        if text.is_empty() || text.contains('\n') || text.contains('\r') {
            return Err(Error::InvalidParameter(
                "header line must be non-empty single-line text",
            ));
        }
        out.extend_from_slice(text.as_bytes());
        out.push(b'\n');
    }
    let (major, minor) = image.orientation.labels();
    out.extend_from_slice(format!("\n{} {} {} {}\n", major, image.height, minor, image.width).as_bytes());

    let rle_ok = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&image.width);
    for (y, line) in image.pixels.chunks_exact(image.width).enumerate() {
        if rle_ok && (rle || !flat_safe(line)) {
            write_new_rle(&mut out, line);
        } else if flat_safe(line) {
            out.extend(line.iter().flatten());
        } else {
            return Err(Error::Unrepresentable(y));
        }
    }
    Ok(out)
}

fn flat_safe(line: &[[u8; 4]]) -> bool {
    if line.iter().any(|p| p[0] == 1 && p[1] == 1 && p[2] == 1) {
        return false;
    }
    // A flat line starting with 2 2 hi lo could be mistaken for an RLE header.
    match line.first() {
        Some(&[2, 2, hi, lo]) => (((hi as usize) << 8) | lo as usize) != line.len() || hi & 0x80 != 0,
        _ => true,
    }
}

fn write_new_rle(out: &mut Vec<u8>, line: &[[u8; 4]]) {
    let width = line.len();
    out.extend_from_slice(&[2, 2, (width >> 8) as u8, (width & 0xff) as u8]);
    let mut comp = vec![0u8; width];
    for c in 0..4 {
        for (dst, px) in comp.iter_mut().zip(line) {
            *dst = px[c];
        }
        encode_component(out, &comp);
    }
}

fn run_len(v: &[u8], at: usize) -> usize {
    let first = v[at];
    v[at..].iter().take(127).take_while(|&&b| b == first).count()
}

fn encode_component(out: &mut Vec<u8>, v: &[u8]) {
    let mut i = 0;
    while i < v.len() {
        let run = run_len(v, i);
        if run >= MIN_RUN {
            out.push(128 + run as u8);
            out.push(v[i]);
            i += run;
            continue;
        }
        // Literal block: extend until a worthwhile run starts.
        let start = i;
        while i < v.len() && i - start < 128 {
            if i > start && run_len(v, i) >= MIN_RUN {
                break;
            }
            i += 1;
        }
        out.push((i - start) as u8);
        out.extend_from_slice(&v[start..i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(header: &str, res: &str, data: &[u8]) -> Vec<u8> {
        let mut v = format!("#?RADIANCE\n{header}\n{res}\n").into_bytes();
        v.extend_from_slice(data);
        v
    }

    #[test]
    fn minimal_flat_file() {
        let bytes = file("FORMAT=32-bit_rle_rgbe\n", "-Y 1 +X 1", &[128, 128, 128, 129]);
        let img = parse_hdr(&bytes).unwrap();
        assert_eq!((img.width, img.height), (1, 1));
        assert_eq!(img.pixels, vec![[128, 128, 128, 129]]);
        assert_eq!(img.header_var("FORMAT"), Some(FORMAT_RGBE));
    }

    #[test]
    fn new_rle_run_of_eight() {
        let mut data = vec![2, 2, 0, 8];
        for _ in 0..4 {
            data.extend_from_slice(&[0x88, 0x40]);
        }
        let img = parse_hdr(&file("", "-Y 1 +X 8", &data)).unwrap();
        assert_eq!(img.pixels, vec![[64, 64, 64, 64]; 8]);
    }

    #[test]
    fn new_rle_literals_and_runs() {
        // width 10: component 0 = literal 3 + run 7, others run 10
        let mut data = vec![2, 2, 0, 10, 3, 1, 2, 3, 128 + 7, 9];
        for c in 0..3 {
            data.extend_from_slice(&[128 + 10, 100 + c]);
        }
        let img = parse_hdr(&file("", "-Y 1 +X 10", &data)).unwrap();
        let r: Vec<u8> = img.pixels.iter().map(|p| p[0]).collect();
        assert_eq!(r, vec![1, 2, 3, 9, 9, 9, 9, 9, 9, 9]);
        assert!(img.pixels.iter().all(|p| p[1] == 100 && p[2] == 101 && p[3] == 102));
    }

    #[test]
    fn old_rle_markers() {
        let data = [10, 20, 30, 130, 1, 1, 1, 3, 5, 6, 7, 8];
        let img = parse_hdr(&file("", "-Y 1 +X 5", &data)).unwrap();
        assert_eq!(
            img.pixels,
            vec![
                [10, 20, 30, 130],
                [10, 20, 30, 130],
                [10, 20, 30, 130],
                [10, 20, 30, 130],
                [5, 6, 7, 8]
            ]
        );
        // Consecutive markers shift the count by 8 bits each.
        let data = [1, 2, 3, 4, 1, 1, 1, 1, 1, 1, 1, 1];
        let img = parse_hdr(&file("", "-Y 1 +X 258", &data)).unwrap();
        assert!(img.pixels.iter().all(|&p| p == [1, 2, 3, 4]));
    }

    #[test]
    fn old_and_new_rle_agree() {
        let old = [7, 8, 9, 130, 1, 1, 1, 7];
        let mut new = vec![2, 2, 0, 8];
        for v in [7, 8, 9, 130] {
            new.extend_from_slice(&[128 + 8, v]);
        }
        let a = parse_hdr(&file("", "-Y 1 +X 8", &old)).unwrap();
        let b = parse_hdr(&file("", "-Y 1 +X 8", &new)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn header_vars_round_trip() {
        let bytes = file(
            "# made by hand\nEXPOSURE=2.0\nFORMAT=32-bit_rle_rgbe\n",
            "-Y 1 +X 1",
            &[128, 128, 128, 129],
        );
        let img = parse_hdr(&bytes).unwrap();
        assert_eq!(img.header_var("EXPOSURE"), Some("2.0"));
        assert_eq!(
            img.header[0],
            HeaderLine {
                key: "# made by hand".into(),
                value: None
            }
        );
        let again = parse_hdr(&write_hdr(&img, true).unwrap()).unwrap();
        assert_eq!(again, img);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_hdr(b"P6\n"), Err(Error::BadSignature));
        assert_eq!(
            parse_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n"),
            Err(Error::TruncatedHeader)
        );
        assert!(matches!(
            parse_hdr(&file("FORMAT=32-bit_rle_xyze\n", "-Y 1 +X 1", &[0; 4])),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse_hdr(&file("", "Y 1 X 1", &[0; 4])),
            Err(Error::BadResolution(_))
        ));
        assert_eq!(
            parse_hdr(&file("", "-Y 2 +X 1", &[1, 2, 3, 4])),
            Err(Error::TruncatedScanline(1))
        );
        assert_eq!(
            parse_hdr(&file("", "-Y 1 +X 2", &[1, 2, 3, 4, 1, 1, 1, 5])),
            Err(Error::RunOverflow(0))
        );
        let mut data = vec![2, 2, 0, 8, 128 + 9, 0];
        data.extend_from_slice(&[0; 16]);
        assert_eq!(parse_hdr(&file("", "-Y 1 +X 8", &data)), Err(Error::RunOverflow(0)));
        assert_eq!(
            parse_hdr(&file("", "-Y 1 +X 1", &[1, 1, 1, 1])),
            Err(Error::LeadingRunMarker(0))
        );
    }

    #[test]
    fn orientation_preserved() {
        let bytes = file("", "+X 2 -Y 3", &[9u8; 24]);
        let img = parse_hdr(&bytes).unwrap();
        assert_eq!(img.orientation, Orientation::PosXNegY);
        assert_eq!((img.width, img.height), (3, 2));
        let out = write_hdr(&img, false).unwrap();
        assert!(out.windows(9).any(|w| w == b"+X 2 -Y 3"));
        assert_eq!(parse_hdr(&out).unwrap(), img);
    }

    #[test]
    fn rle_shorter_than_flat_for_constant_line() {
        let img = RadianceImage::new(16, 1, vec![[200, 100, 50, 130]; 16]).unwrap();
        let flat = write_hdr(&img, false).unwrap();
        let rle = write_hdr(&img, true).unwrap();
        assert!(rle.len() < flat.len());
        // header identical, so pixel section sizes are 64 vs 4 + 4*2
        assert_eq!(flat.len() - rle.len(), 64 - 12);
        assert_eq!(parse_hdr(&rle).unwrap(), img);
        assert_eq!(parse_hdr(&flat).unwrap(), img);
    }

    #[test]
    fn write_rejects_empty() {
        let img = RadianceImage {
            width: 0,
            height: 0,
            pixels: vec![],
            header: vec![],
            orientation: Orientation::NegYPosX,
        };
        assert_eq!(write_hdr(&img, true), Err(Error::EmptyImage));
    }

    #[test]
    fn marker_pixels_force_rle_or_fail() {
        let mut px = vec![[5, 5, 5, 130]; 8];
        px[3] = [1, 1, 1, 7];
        let img = RadianceImage::new(8, 1, px.clone()).unwrap();
        let bytes = write_hdr(&img, false).unwrap();
        assert_eq!(parse_hdr(&bytes).unwrap(), img);

        let img = RadianceImage::new(4, 2, px).unwrap();
        assert_eq!(write_hdr(&img, false), Err(Error::Unrepresentable(0)));
    }

    #[test]
    fn split_merge() {
        let img = RadianceImage::new(2, 1, vec![[10, 20, 30, 129], [0, 0, 0, 0]]).unwrap();
        let p = split_planes(&img);
        assert_eq!(p.mantissa, [vec![10, 0], vec![20, 0], vec![30, 0]]);
        assert_eq!(p.exponent, vec![129, 0]);
        assert_eq!(merge_planes(&p).unwrap(), img);

        let zero = RadianceImage::new(3, 2, vec![[0; 4]; 6]).unwrap();
        let p = split_planes(&zero);
        assert!(p
            .mantissa
            .iter()
            .chain([&p.exponent])
            .all(|v| v.iter().all(|&x| x == 0)));
        assert!(p.is_canonical());

        let mut bad = p.clone();
        bad.exponent.pop();
        assert!(matches!(bad.merge(), Err(Error::DimensionMismatch { .. })));
    }
}

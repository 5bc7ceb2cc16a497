//! Pluggable base-layer (lossy) and enhancement-layer (lossless) coders.
//!
//! Coders are looked up by a one-byte id. Every payload is framed as
//!
//! ```text
//! u32 LE  length of the coded data
//! u8      coder id
//! u32 LE  CRC-32 (IEEE) of the raw image / plane bytes
//! ...     coded data
//! ```
//!
//! and decoding always re-checks the CRC against the reconstructed samples.

pub mod bits;
pub mod lossless;
pub mod lossy;

use crate::error::{Error, Result};
use crate::tonemap::SdrImage;

pub const FRAME_HEADER_LEN: usize = 9;

/// An 8-bit sample plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane8 {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

impl Plane8 {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: samples.len(),
            });
        }
        Ok(Self { width, height, samples })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossyCoderSpec {
    pub coder_id: u8,
    /// 1..=100
    pub quality: u8,
}

impl Default for LossyCoderSpec {
    fn default() -> Self {
        Self {
            coder_id: 1,
            quality: 85,
        }
    }
}

impl LossyCoderSpec {
    pub fn validate(&self) -> Result<()> {
        lossy_coder(self.coder_id)?;
        if !(1..=100).contains(&self.quality) {
            return Err(Error::InvalidParameter("quality must be in 1..=100"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LosslessCoderSpec {
    pub coder_id: u8,
}

impl Default for LosslessCoderSpec {
    fn default() -> Self {
        Self { coder_id: 1 }
    }
}

pub trait LossyCoder: Sync {
    fn id(&self) -> u8;
    fn name(&self) -> &'static str;
    fn encode(&self, img: &SdrImage, quality: u8) -> Vec<u8>;
    fn decode(&self, data: &[u8], width: usize, height: usize, quality: u8) -> Result<SdrImage>;
}

pub trait LosslessCoder: Sync {
    fn id(&self) -> u8;
    fn name(&self) -> &'static str;
    fn encode(&self, plane: &Plane8) -> Vec<u8>;
    fn decode(&self, data: &[u8], width: usize, height: usize) -> Result<Plane8>;
}

static LOSSY: [&dyn LossyCoder; 2] = [&lossy::RawRgb, &lossy::BlockDct];
static LOSSLESS: [&dyn LosslessCoder; 2] = [&lossless::Stored, &lossless::MedRice];

pub fn lossy_coder(id: u8) -> Result<&'static dyn LossyCoder> {
    LOSSY
        .iter()
        .copied()
        .find(|c| c.id() == id)
        .ok_or(Error::UnknownCoder { kind: "lossy", id })
}

pub fn lossless_coder(id: u8) -> Result<&'static dyn LosslessCoder> {
    LOSSLESS
        .iter()
        .copied()
        .find(|c| c.id() == id)
        .ok_or(Error::UnknownCoder { kind: "lossless", id })
}

pub fn crc32(bytes: &[u8]) -> u32 {
    crc32fast::hash(bytes)
}

fn frame(coder_id: u8, crc: u32, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + data.len());
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.push(coder_id);
    out.extend_from_slice(&crc.to_le_bytes());
    out.extend_from_slice(data);
    out
}

/// Total framed size of the payload starting at `bytes[0]`.
pub fn framed_len(bytes: &[u8]) -> Result<usize> {
    let head = bytes.get(..4).ok_or(Error::Overrun("payload header"))?;
    let len = u32::from_le_bytes(head.try_into().unwrap()) as usize;
    let total = FRAME_HEADER_LEN.checked_add(len).ok_or(Error::Overrun("payload"))?;
    if bytes.len() < total {
        return Err(Error::Overrun("payload"));
    }
    Ok(total)
}

struct Frame<'a> {
    coder_id: u8,
    crc: u32,
    data: &'a [u8],
}

fn unframe(payload: &[u8]) -> Result<Frame<'_>> {
    if payload.len() < FRAME_HEADER_LEN || framed_len(payload)? != payload.len() {
        return Err(Error::Overrun("payload"));
    }
    Ok(Frame {
        coder_id: payload[4],
        crc: u32::from_le_bytes(payload[5..9].try_into().unwrap()),
        data: &payload[FRAME_HEADER_LEN..],
    })
}

pub fn lossy_encode(img: &SdrImage, spec: LossyCoderSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    if img.is_empty() {
        return Err(Error::EmptyImage);
    }
    let coder = lossy_coder(spec.coder_id)?;
    let data = coder.encode(img, spec.quality);
    // The checksum covers what the decoder must reproduce, not the input.
    let decoded = coder.decode(&data, img.width, img.height, spec.quality)?;
    Ok(frame(spec.coder_id, crc32(&decoded.planar_bytes()), &data))
}

pub fn lossy_decode(payload: &[u8], spec: LossyCoderSpec, width: usize, height: usize) -> Result<SdrImage> {
    spec.validate()?;
    let f = unframe(payload)?;
    if f.coder_id != spec.coder_id {
        return Err(Error::CorruptPayload("coder id does not match stream header"));
    }
    let img = lossy_coder(f.coder_id)?
        .decode(f.data, width, height, spec.quality)
        .map_err(|_| Error::Checksum("base payload"))?;
    if crc32(&img.planar_bytes()) != f.crc {
        return Err(Error::Checksum("base payload"));
    }
    Ok(img)
}

pub fn lossless_encode(plane: &Plane8, spec: LosslessCoderSpec) -> Result<Vec<u8>> {
    let coder = lossless_coder(spec.coder_id)?;
    if plane.samples.len() != plane.width * plane.height {
        return Err(Error::DimensionMismatch {
            expected: plane.width * plane.height,
            actual: plane.samples.len(),
        });
    }
    Ok(frame(spec.coder_id, crc32(&plane.samples), &coder.encode(plane)))
}

pub fn lossless_decode(
    payload: &[u8],
    spec: LosslessCoderSpec,
    width: usize,
    height: usize,
    section: &'static str,
) -> Result<Plane8> {
    let f = unframe(payload)?;
    if f.coder_id != spec.coder_id {
        return Err(Error::CorruptPayload("coder id does not match stream header"));
    }
    let plane = lossless_coder(f.coder_id)?
        .decode(f.data, width, height)
        .map_err(|_| Error::Checksum(section))?;
    if crc32(&plane.samples) != f.crc {
        return Err(Error::Checksum(section));
    }
    Ok(plane)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn crc_is_ieee() {
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn registry() {
        assert_eq!(lossy_coder(1).unwrap().name(), "block-dct");
        assert_eq!(lossless_coder(1).unwrap().name(), "med-rice");
        assert!(matches!(lossy_coder(9), Err(Error::UnknownCoder { .. })));
        assert!(matches!(lossless_coder(9), Err(Error::UnknownCoder { .. })));
        assert!(LossyCoderSpec {
            coder_id: 1,
            quality: 0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn framing_layout() {
        let plane = Plane8::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        let p = lossless_encode(&plane, LosslessCoderSpec { coder_id: 0 }).unwrap();
        assert_eq!(&p[..4], &4u32.to_le_bytes());
        assert_eq!(p[4], 0);
        assert_eq!(&p[5..9], &crc32(&[1, 2, 3, 4]).to_le_bytes());
        assert_eq!(&p[9..], &[1, 2, 3, 4]);
        assert_eq!(framed_len(&p).unwrap(), 13);
    }

    #[test]
    fn every_byte_flip_detected() {
        let plane = Plane8::new(16, 16, (0..=255).collect()).unwrap();
        let spec = LosslessCoderSpec::default();
        let p = lossless_encode(&plane, spec).unwrap();
        for i in 0..p.len() {
            let mut bad = p.clone();
            bad[i] ^= 0x5a;
            assert!(lossless_decode(&bad, spec, 16, 16, "plane").is_err(), "byte {i}");
        }
    }

    #[test]
    fn lossy_checksum_and_flips() {
        let img = SdrImage::new(9, 9, [vec![10; 81], vec![120; 81], vec![250; 81]]).unwrap();
        let spec = LossyCoderSpec::default();
        let p = lossy_encode(&img, spec).unwrap();
        let out = lossy_decode(&p, spec, 9, 9).unwrap();
        assert_eq!(lossy_decode(&p, spec, 9, 9).unwrap(), out);
        for i in 0..p.len() {
            let mut bad = p.clone();
            bad[i] ^= 0x21;
            assert!(lossy_decode(&bad, spec, 9, 9).is_err(), "byte {i}");
        }
    }

    proptest! {
        #[test]
        fn lossless_round_trip(w in 1usize..24, h in 1usize..24, seed in any::<u64>(), id in 0u8..2) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let levels: u16 = rng.random_range(1..=256);
            let samples = (0..w * h).map(|_| rng.random_range(0..levels) as u8).collect();
            let plane = Plane8::new(w, h, samples).unwrap();
            let spec = LosslessCoderSpec { coder_id: id };
            let p = lossless_encode(&plane, spec).unwrap();
            prop_assert_eq!(lossless_decode(&p, spec, w, h, "plane").unwrap(), plane);
        }
    }
}

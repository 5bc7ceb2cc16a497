//! Dual-layer lossless coding of Radiance `.hdr` images.
//!
//! The base layer is a tone-mapped 8-bit image coded with a lossy coder and
//! decodable on its own. The enhancement layer carries the exponent plane and
//! mantissa residuals against a per-exponent linear estimate computed from
//! the decoded base image, which together reconstruct the original file
//! bit for bit.

pub mod bench;
pub mod codec;
pub mod container;
pub mod error;
pub mod estimator;
pub mod radiance;
pub mod rgbe;
pub mod synth;
pub mod tonemap;

pub use container::{decode_hdr, decode_sdr, deserialize, encode, serialize, DualLayerStream, EncodeConfig, Mode};
pub use error::{Error, Result};
pub use radiance::{parse_hdr, write_hdr, RadianceImage};

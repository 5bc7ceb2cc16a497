use thiserror::Error;

/// Errors produced anywhere in the codec.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The `#?RADIANCE` / `#?RGBE` signature line is missing or wrong.
    #[error("missing Radiance signature")]
    BadSignature,
    /// EOF before the header or resolution line was complete.
    #[error("truncated header")]
    TruncatedHeader,
    #[error("unsupported pixel format `{0}`")]
    UnsupportedFormat(String),
    #[error("malformed resolution line `{0}`")]
    BadResolution(String),
    #[error("truncated scanline {0}")]
    TruncatedScanline(usize),
    /// A run (old or new RLE) would write past the end of a scanline.
    #[error("run-length overflow in scanline {0}")]
    RunOverflow(usize),
    /// An old-style run marker appeared with no pixel to repeat.
    #[error("run marker at start of scanline {0}")]
    LeadingRunMarker(usize),
    #[error("zero-length run in scanline {0}")]
    ZeroRun(usize),
    /// A flat scanline containing (1,1,1,n) pixels cannot be written unambiguously.
    #[error("scanline {0} cannot be stored without run-length encoding")]
    Unrepresentable(usize),

    #[error("image dimensions must be nonzero")]
    EmptyImage,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid float component {0}")]
    InvalidFloat(f64),
    #[error("exponent {0} outside the representable range")]
    ExponentRange(i64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("no regression entry for channel {channel} exponent {exponent}")]
    MissingRegression { channel: u8, exponent: u8 },

    #[error("unknown {kind} coder id {id}")]
    UnknownCoder { kind: &'static str, id: u8 },
    #[error("checksum mismatch in {0}")]
    Checksum(&'static str),
    #[error("corrupt payload: {0}")]
    CorruptPayload(&'static str),
    #[error("malformed escape sequence")]
    MalformedEscape,

    #[error("bad magic")]
    BadMagic,
    #[error("unsupported stream version {0}")]
    UnsupportedVersion(u8),
    #[error("length overrun in {0}")]
    Overrun(&'static str),
    #[error("stream has no enhancement layer")]
    MissingEnhancement,
}

pub type Result<T> = std::result::Result<T, Error>;

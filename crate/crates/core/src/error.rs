use thiserror::Error;

/// Crate-wide error type.
///
/// Bitstream parsing distinguishes bad magic, unsupported version,
/// corrupt header fields, and truncated/corrupt payloads so callers
/// can react to each condition separately.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input is structurally valid but degenerate for the requested
    /// operation (constant map where a rescale is needed, zero-variance
    /// correlation, all-zero weights, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("bad magic bytes in bitstream header")]
    BadMagic,

    #[error("unsupported bitstream version {0}")]
    UnsupportedVersion(u8),

    #[error("corrupt bitstream header: {0}")]
    CorruptHeader(String),

    #[error("bitstream payload truncated")]
    TruncatedPayload,

    #[error("corrupt bitstream payload: {0}")]
    CorruptPayload(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }
}

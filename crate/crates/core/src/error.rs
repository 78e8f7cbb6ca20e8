use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextonError {
    #[error("degenerate transform: |det A| = {0:e}")]
    DegenerateTransform(f64),

    #[error("frame mismatch: expected {expected}, got {actual}")]
    FrameMismatch { expected: String, actual: String },

    #[error("feature_dim mismatch: expected {expected}, got {actual}")]
    FeatureDimMismatch { expected: usize, actual: usize },

    #[error("capacity exceeded: {count} > {capacity}")]
    CapacityExceeded { count: usize, capacity: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range for set of {len} gaussians")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no effective textons")]
    NoEffectiveTextons,

    #[error("degenerate mean covariance")]
    DegenerateMeanCovariance,

    #[error("no edit detected")]
    NoEditDetected,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid gaussian set: {}", .0.join("; "))]
    InvalidSet(Vec<String>),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported image format (magic bytes: {0})")]
    UnsupportedFormat(String),

    #[error("unexpected end of stream")]
    UnexpectedEof,

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TextonError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> TextonError {
    TextonError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

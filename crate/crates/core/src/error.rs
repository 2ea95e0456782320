use std::path::PathBuf;

/// Errors produced by the forecasting core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar argument or configuration value was outside its valid range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two arrays that must agree in shape did not.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// A diffusion step outside the range an operation accepts.
    #[error("diffusion step {step} outside {min}..={max}")]
    StepOutOfRange { step: usize, min: usize, max: usize },

    /// A series contained NaN or infinite values.
    #[error("series contains a non-finite value at channel {channel}, timestep {timestep}")]
    NonFinite { channel: usize, timestep: usize },

    #[error("training dataset is empty")]
    EmptyDataset,

    /// The balancing denominator `(1 + c W(t))^d` is undefined or too close to zero.
    #[error("balancing denominator base 1 + c*W({step}) = {base:e} is not safely positive")]
    DegenerateBalance { step: usize, base: f64 },

    /// A z-score cannot be fitted to a channel with zero spread.
    #[error("channel '{0}' is constant; z-score normalization is undefined")]
    ConstantChannel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseCell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: row {row}, column '{column}': value is not finite")]
    NonFiniteCell {
        path: PathBuf,
        row: usize,
        column: String,
    },

    #[error("{path}: row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("model file is corrupt: {0}")]
    CorruptModel(String),

    #[error("model format version mismatch: file has version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("model checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("value {value} at index {index} is outside [0, 1] or not finite")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    InvalidChannels(usize),
    #[error("data length {found} does not match shape (expected {expected})")]
    InvalidLength { expected: usize, found: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("timestep {t} outside [0, {k}]")]
    TimestepOutOfRange { t: usize, k: usize },
    #[error("prompt admits no template")]
    EmptyPrompt,
    #[error("prompt refers to unknown label {0:?}")]
    UnknownLabel(String),
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pool factor {factor} does not divide {width}x{height}")]
    IndivisibleDimensions {
        factor: usize,
        width: usize,
        height: usize,
    },
    #[error("mask value {value} at index {index} is not 0 or 1")]
    NonBinaryInput { index: usize, value: f64 },
    #[error("{bands} bands do not fit in width {width}")]
    TooManyBands { bands: usize, width: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("insufficient data: {needed} pairs requested, {available} available")]
    InsufficientData { needed: usize, available: usize },
    #[error("degenerate variance: correlation is undefined for a constant grid")]
    DegenerateVariance,
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

impl Error {
    /// Stable machine-readable name, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ValueOutOfRange { .. } => "ValueOutOfRange",
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidChannels(_) => "InvalidChannels",
            Error::InvalidLength { .. } => "InvalidLength",
            Error::InvalidSchedule(_) => "InvalidSchedule",
            Error::TimestepOutOfRange { .. } => "TimestepOutOfRange",
            Error::EmptyPrompt => "EmptyPrompt",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::InvalidMixture(_) => "InvalidMixture",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::IndivisibleDimensions { .. } => "IndivisibleDimensions",
            Error::NonBinaryInput { .. } => "NonBinaryInput",
            Error::TooManyBands { .. } => "TooManyBands",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::InvalidOptions(_) => "InvalidOptions",
        }
    }
}

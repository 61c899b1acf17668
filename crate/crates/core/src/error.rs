use thiserror::Error;

/// Errors raised across the waveform, channel and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported overlap factor L = {0} (only L = 4 is available for PHYDYAS)")]
    UnsupportedOverlap(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed filter file: {0}")]
    FilterFormat(String),

    #[error("coefficient count mismatch: header declares {expected}, found {found}")]
    CoefficientCount { expected: usize, found: usize },

    #[error("filter has zero energy and cannot be normalized")]
    ZeroEnergy,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("expected {expected} bits, got {got}")]
    BitCount { expected: usize, got: usize },

    #[error("tone index {tone} out of range for M_F = {mf}")]
    ToneOutOfRange { tone: usize, mf: usize },

    #[error("bit stream underrun after {consumed} bits")]
    BitUnderrun { consumed: usize },

    #[error("lag {lag} outside the supported range |k| <= {max}")]
    LagOutOfRange { lag: i64, max: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("signal of {len} samples is too short (need at least {needed})")]
    SignalTooShort { len: usize, needed: usize },

    #[error("{got} symbols are too few for a CCDF down to {depth:e} (need {needed})")]
    TooFewSymbols { got: usize, needed: usize, depth: f64 },

    #[error("tap delay of {delay} samples exceeds the filter length {limit}")]
    DelayTooLong { delay: usize, limit: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration rather than a failed run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::FilterFormat(_)
                | Error::CoefficientCount { .. }
                | Error::ZeroEnergy
                | Error::UnsupportedOverlap(_)
                | Error::InvalidParameter(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

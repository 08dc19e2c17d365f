use thiserror::Error;

/// Failures while decoding a binary PNM stream.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PnmError {
    #[error("malformed PNM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PNM variant {0} (only binary P5/P6 are read)")]
    UnsupportedMagic(String),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Pnm(#[from] PnmError),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("window too short: need {needed} bytes, got {got}")]
    WindowTooShort { needed: usize, got: usize },

    #[error("need at least {needed} feature vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training set must contain both labels -1 and +1")]
    SingleClass,

    #[error("binary training labels must be -1 or +1, got {0}")]
    InvalidBinaryLabel(i64),

    #[error("non-finite feature value in sample {0}")]
    NonFinite(usize),

    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),

    #[error("label {0} is unknown to the model")]
    UnknownLabel(i64),

    #[error("plane {width}x{height} is smaller than one 4x4 block")]
    PlaneTooSmall { width: usize, height: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("calibration curve is not strictly monotone in eta")]
    NonMonotoneCurve,

    #[error("calibration curve k values must be strictly increasing")]
    UnsortedGrid,

    #[error("model file: {0}")]
    ModelFormat(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

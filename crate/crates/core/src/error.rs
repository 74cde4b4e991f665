use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("smooth step order must be at least 2, got {0}")]
    SmoothStepOrder(usize),
    #[error("grid size {0} is not a power of two >= 32")]
    GridSize(usize),
    #[error("{scales} scales requested but a {n}x{n} grid supports at most {max}")]
    TooManyScales { scales: usize, n: usize, max: usize },
    #[error("invalid frame parameter: {0}")]
    FrameParam(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown curvelet index {0}")]
    UnknownIndex(String),
    #[error("zero frequency has no direction")]
    ZeroFrequency,
    #[error("zero field has no molecule profile")]
    ZeroField,
    #[error("hyper-curvelets need a directional index, got scale {0}")]
    NotDirectional(usize),
    #[error("time step {dt} violates the stability bound {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("invalid velocity model: {0}")]
    VelocityModel(String),
    #[error("warp is not a diffeomorphism: {0}")]
    NonInvertibleWarp(String),
    #[error("symbol is not separable: {0}")]
    NonSeparableSymbol(String),
    #[error("invalid operator: {0}")]
    Operator(String),
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("keeping {requested} entries exceeds the stored support {support} of column {column}")]
    TruncationTooLarge {
        requested: usize,
        support: usize,
        column: String,
    },
    #[error("threshold must be positive, got {0}")]
    Threshold(f64),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

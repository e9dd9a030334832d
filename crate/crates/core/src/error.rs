use thiserror::Error;

/// Errors raised across the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2, 4 or 8)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("state is not normalised (squared norm {0})")]
    NotNormalized(f64),
    #[error("probabilities must be non-negative and sum to 1 (sum {0})")]
    BadProbabilities(f64),
    #[error("basis is not orthonormal (max deviation {0:e})")]
    NonOrthonormalBasis(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("challenge length {got} does not match the model's n = {expected}")]
    ChallengeLength { expected: usize, got: usize },
    #[error("expected {expected} bits, got {got}")]
    BitWidth { expected: usize, got: usize },
    #[error("bit values must be 0 or 1")]
    NotABit,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),
    #[error("empty database")]
    EmptyDatabase,
    #[error("no selectable challenge left in the database")]
    DatabaseExhausted,
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

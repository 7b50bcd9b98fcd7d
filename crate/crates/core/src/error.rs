use thiserror::Error;

/// Errors produced by the LDLC library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {d} is too small (minimum {min})")]
    DegreeTooSmall { d: usize, min: usize },
    #[error("invalid dimension: n = {n} must exceed d = {d}")]
    InvalidDimension { n: usize, d: usize },
    #[error("cycle repair did not converge after {attempts} swap attempts")]
    ConstructionFailed { attempts: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("precision difference is not positive; the divisor is not a factor of the product")]
    NonPositivePrecision,
    #[error("every mixture weight is zero")]
    AllZeroWeights,
    #[error("parity-check matrix is singular")]
    SingularMatrix,
    #[error("no elimination order exists for hypercube shaping")]
    OrderingFailed,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

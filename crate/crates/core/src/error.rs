use thiserror::Error;

/// Errors raised by the averaging library and the estimator banks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid group structure: {0}")]
    InvalidGroup(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is numerically singular (condition number {0:e})")]
    Singular(f64),

    #[error("no admissible support for convex weights")]
    NoAdmissibleSupport,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("root of {what} not bracketed in [{lo:e}, {hi:e}]")]
    OutOfBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("too few successful replicates: {successes} of {requested}")]
    TooFewReplicates { successes: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

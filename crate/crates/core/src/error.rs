use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("{what} index {index} out of range 0..{bound}")]
    OutOfRange {
        what: &'static str,
        index: i64,
        bound: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("harmonic {harmonic} violates the Nyquist rule: need 1 <= j <= {max} for n = {n}")]
    Nyquist { harmonic: i64, max: i64, n: usize },

    #[error("phase {requested} is not realizable on this lattice; nearest realizable phase is {nearest}")]
    Incommensurate { requested: f64, nearest: f64 },

    #[error("measurement regions invalid: {0}")]
    Regions(String),

    #[error("unknown backend `{0}`")]
    UnknownBackend(String),

    #[error("numerical invariant violated: {0}")]
    Invariant(String),
}

use thiserror::Error;

/// Errors raised by group construction, transforms, kernels and the
/// verification harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid radix {radix} at position {position}: every radix must be at least 2")]
    InvalidRadix { position: usize, radix: u32 },

    #[error("group of order {size} exceeds the capacity limit of {limit} cosets")]
    Capacity { size: u128, limit: u64 },

    #[error("{what} = {value} is out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("operands belong to different group specifications")]
    SpecMismatch,

    #[error("empty partial sum: S_0 is not defined, use n >= 1")]
    EmptySum,

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    #[error("atom support violation: {0}")]
    SupportViolation(String),

    #[error("degenerate atom: raw data is constant on its support")]
    DegenerateAtom,

    #[error("atom condition failed: {0}")]
    InvalidAtom(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("no admissible block orders: {0}")]
    SelectionFailure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

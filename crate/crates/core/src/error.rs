use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not unimodular: det = {det}")]
    NonUnimodular { det: i64 },

    #[error("matrix is +/- identity, excluded as trivial")]
    TrivialMatrix,

    #[error("capacity exceeded: {what} needs {requested}, limit is {limit}")]
    CapacityExceeded {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("lattice size N = {n} does not exceed the {family} threshold {threshold:.6} at horizon {horizon}")]
    ThresholdUnmet {
        n: u64,
        family: &'static str,
        threshold: f64,
        horizon: u32,
    },

    #[error("partition is not aligned to the N = {n} lattice and {strings} strings exceed the cap {cap}")]
    AlignmentRequired { n: u64, strings: u128, cap: u128 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

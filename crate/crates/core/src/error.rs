use thiserror::Error;

/// Errors raised by state validation, constructions, searches and the protocol.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("Schmidt coefficients sum to {sum}, expected 1 (tolerance 1e-9)")]
    Normalization { sum: f64 },

    #[error("negative Schmidt coefficient {value} at index {index}")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("operator set is empty")]
    EmptySet,

    #[error("bad arguments: {0}")]
    BadArguments(String),

    #[error("polygon cannot close: lambda0 = {lambda0} exceeds 1/2")]
    PolygonImpossible { lambda0: f64 },

    #[error("bad partition: {0}")]
    BadPartition(String),

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("letter {letter} out of range for an alphabet of {size}")]
    LetterOutOfRange { letter: usize, size: usize },

    #[error("measurement basis is degenerate: {0}")]
    DegenerateBasis(String),

    #[error("feasibility is not monotone in lambda0 along the scan: {0}")]
    NonMonotone(String),

    #[error("invalid operator set: {0}")]
    InvalidSet(String),
}

pub type Result<T> = std::result::Result<T, Error>;

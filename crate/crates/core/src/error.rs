use thiserror::Error;

/// Errors raised by the simulation and bound routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("operation requires the planar lattice (d = 2), got d = {0}")]
    NotPlanar(usize),

    #[error("vertex set must be nonempty")]
    EmptySet,

    #[error("invalid constraint law: {0}")]
    InvalidLaw(String),

    #[error("value {value} outside [{lo}, {hi}] for {what}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("window margin violated: {0}")]
    MarginViolation(String),

    #[error("{0} lies outside the simulation window")]
    OutsideWindow(String),

    #[error("tiny graph too large: {0}")]
    GraphTooLarge(String),

    #[error("invalid tiny graph: {0}")]
    InvalidGraph(String),

    #[error("regions overlap: {0}")]
    Overlap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

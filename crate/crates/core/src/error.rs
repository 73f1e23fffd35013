use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("conditioning event has zero probability (threshold {threshold}, {side} side)")]
    EmptyConditioning { threshold: String, side: &'static str },
    #[error("invalid matroid: {0}")]
    InvalidMatroid(String),
    #[error("demand limit is not a submatroid of the buyer's constraint")]
    ConstraintMismatch,
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("scale limit exceeded: {what} is {size}, limit {limit}")]
    Scale {
        what: &'static str,
        size: u128,
        limit: u128,
    },
    #[error("unsupported constraint: {0}")]
    UnsupportedConstraint(String),
    #[error("linear program is {0}")]
    Lp(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn check_scale(what: &'static str, size: u128, limit: u128) -> Result<()> {
    if size > limit {
        Err(Error::Scale { what, size, limit })
    } else {
        Ok(())
    }
}

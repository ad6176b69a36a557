use thiserror::Error;

/// Errors surfaced by the library. Solver-level outcomes that are not errors
/// (infeasible or unbounded LPs) are reported through [`crate::inner::LpStatus`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("period {t} outside 1..={horizon}")]
    PeriodOutOfRange { t: usize, horizon: usize },
    #[error("second-stage set is empty: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("missing prediction for period {0}")]
    MissingPrediction(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

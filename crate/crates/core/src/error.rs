//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^dag| entry = {0:.3e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("beta key ({0}, {1}) is reserved for the identity/Z-readout block")]
    ReservedBetaKey(String, String),
    #[error("no feasible alpha: Choi matrix is not PSD even as alpha -> 0")]
    InfeasibleBeta,
    #[error("orthogonal-complement basis collapsed (norm {0:.3e})")]
    DegenerateBasis(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("variance denominator is numerically zero")]
    DegenerateDenominator,
    #[error("shot budget {0} exhausted before the estimate stabilized")]
    BudgetExceeded(u64),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

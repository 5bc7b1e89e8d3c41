use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A plane integral was requested for a term whose quadratic coefficient
    /// has non-negative real part.
    #[error("term is not integrable over the plane (Re quad = {0})")]
    NonIntegrable(f64),
    #[error("kernel id {0} is out of range 1..=4")]
    InvalidKernelId(u8),
    #[error("outcome probability {0:e} is below the conditioning threshold")]
    ZeroProbability(f64),
    #[error("qubit state is not positive: eigenvalue {0:e}")]
    NonPositive(f64),
    #[error("qubit state is not hermitian: deviation {0:e}")]
    NonHermitian(f64),
    #[error("Fock truncation overflow: tail population {tail:e} with cutoff {cutoff}")]
    TruncationOverflow { tail: f64, cutoff: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

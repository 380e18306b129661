//! Error type shared by every module.
//!
//! Numerical routines return `Err` instead of silently clamping whenever a
//! contract is violated (shape mismatches, non-states, invalid witness
//! states, norm bounds exceeded). Tolerances live at the call sites that
//! enforce them; the error carries the measured residual.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operands live on different algebras")]
    AlgebraMismatch,

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("zero operator in a factorization; cannot normalize")]
    ZeroOperator,

    #[error("representation table invalid: {0}")]
    InvalidRep(String),

    #[error("witness states do not certify the inequality (residual {0:.3e})")]
    WitnessInvalid(f64),

    #[error("interpolation system inconsistent (residual {0:.3e})")]
    InconsistentSystem(f64),

    #[error("factor norm {got:.9} exceeds certified limit {limit:.9}; the norm estimate is likely an underestimate")]
    NormExcess { got: f64, limit: f64 },

    #[error("form is not positive (min Gram eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("form pairing is not hermitian (residual {0:.3e})")]
    NotHermitianPairing(f64),

    #[error("compressed middle operator not PSD (min eigenvalue {0:.3e})")]
    CompressionNotPsd(f64),

    #[error("frame change is not an isometry match (residual {0:.3e})")]
    FrameMismatch(f64),

    #[error("numerical decomposition failed: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

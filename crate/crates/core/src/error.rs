use thiserror::Error;

use crate::spd::SpdMatrix;

pub type Result<T> = std::result::Result<T, SpdError>;

#[derive(Debug, Error)]
pub enum SpdError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e} <= tolerance {tolerance:e}")]
    NotPositiveDefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("symmetric eigensolver did not converge")]
    EigenFailure,

    #[error("scalar function undefined at eigenvalue {value:e}")]
    Domain { value: f64 },

    #[error("degenerate spectrum: relative eigenvalue gap {gap:e} below {tolerance:e}")]
    DegenerateSpectrum { gap: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("Karcher flow did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Box<SpdMatrix>,
    },
}

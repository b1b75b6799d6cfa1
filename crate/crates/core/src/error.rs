use thiserror::Error;

/// Errors raised by the linear-algebra substrate, the PQR solvers and the drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PqrError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Cholesky hit a non-positive pivot at the given index.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// The Gram matrix is rank deficient and the SVD fallback is disabled.
    #[error("deflation needed but the SVD fallback is disabled")]
    DeflationNeeded,

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("solver {solver} cannot operate on a {representation} basis")]
    RepresentationMismatch {
        solver: String,
        representation: &'static str,
    },

    #[error("unknown solver or algorithm `{0}`")]
    UnknownSolver(String),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T, E = PqrError> = std::result::Result<T, E>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(PqrError::Dimension(msg.into()))
}

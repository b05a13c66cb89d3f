use thiserror::Error;

use crate::qmat::DensityViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation from identity {0:.3e})")]
    NotUnitary(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(DensityViolation),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{algorithm} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        algorithm: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Existence of a Deutsch fixed point is guaranteed, so this is a solver bug.
    #[error("no density fixed point found (solver bug): {0}")]
    NoFixedPoint(String),

    #[error("post-selection probability vanishes (tr = {0:.3e})")]
    VanishingPostSelection(f64),

    #[error("singular linear system")]
    Singular,

    #[error("unsupported report format `{0}`")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

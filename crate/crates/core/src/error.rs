use thiserror::Error;

/// Errors raised by the effect-algebra toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("matrix is singular (smallest eigenvalue magnitude {0:e})")]
    Singular(f64),

    #[error("bad dimension {0}")]
    BadDimension(usize),

    #[error("not an effect: spectrum [{min:e}, {max:e}] leaves [0, 1]")]
    NotEffect { min: f64, max: f64 },

    #[error("not a state: {0}")]
    NotState(String),

    #[error("not a unit vector (norm {0})")]
    NotRay(f64),

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("numerical breakdown: condition number {0:e} exceeds limit")]
    NumericalBreakdown(f64),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("orthogonality violated: |<f_{i}, f_{j}>| = {overlap:e}")]
    OrthogonalityViolated { i: usize, j: usize, overlap: f64 },

    #[error("phase reconstruction inconsistent: {0}")]
    PhaseInconsistent(String),

    #[error("reconstruction verification failed (residual {0:e})")]
    VerificationFailed(f64),

    #[error("operator kinds differ: {0:?} vs {1:?}")]
    KindMismatch(crate::reconstruction::Kind, crate::reconstruction::Kind),

    #[error("dimension {0} is too small (need at least {1})")]
    DimensionTooSmall(usize, usize),

    #[error("state has a degenerate spectrum")]
    DegenerateState,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Dense complex linear algebra kernel.

mod eig;
mod funcs;
mod matrix;
mod psd;
pub mod random;

pub use eig::{eig_hermitian, EigenDecomposition};
pub(crate) use eig::eig_hermitian_lenient;
pub use funcs::{matrix_function, MatrixFunction};
pub(crate) use funcs::hermitian_inverse;
pub use matrix::{
    basis_vector, conj_vec, inner, norm, normalized, orthonormal_span, projector, ComplexMatrix, ONE, ZERO,
};
pub(crate) use matrix::MatrixDoc;
pub use psd::{loewner_leq, loewner_margin};
pub use random::RandomSource;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const EIG_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-9;
pub const JACOBI_OFF_TOL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Rank cut-off relative to the largest eigenvalue.
pub fn rank_tol(largest: f64) -> f64 {
    1e-9 * largest.max(1.0)
}

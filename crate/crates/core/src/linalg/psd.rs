use super::eig::eig_hermitian;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Smallest eigenvalue of `B − A`, the signed margin of `A ≤ B`.
pub fn loewner_margin(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let n = a.dim()?;
    b.ensure_dim(n)?;
    Ok(eig_hermitian(&(b - a))?.min())
}

/// Löwner order test `A ≤ B`: the smallest eigenvalue of `B − A` is at
/// least `−tol · max(1, ‖B − A‖_F)`.
pub fn loewner_leq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<bool> {
    let n = a.dim()?;
    if b.dim()? != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.rows(),
        });
    }
    let diff = b - a;
    let scale = diff.frobenius_norm().max(1.0);
    Ok(eig_hermitian(&diff)?.min() >= -tol * scale)
}

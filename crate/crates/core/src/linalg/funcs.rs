use serde::{Deserialize, Serialize};

use super::eig::{eig_hermitian, eig_hermitian_lenient, EigenDecomposition};
use super::matrix::ComplexMatrix;
use super::{rank_tol, PSD_TOL};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFunction {
    Sqrt,
    InvSqrt,
    Pinv,
    Inv,
}

/// Applies a scalar function to the spectrum of a Hermitian PSD matrix.
///
/// Eigenvalues at or below `rank_tol` are mapped to zero for `Sqrt`,
/// `InvSqrt` and `Pinv`; `Inv` requires every eigenvalue above it.
pub fn matrix_function(m: &ComplexMatrix, kind: MatrixFunction) -> Result<ComplexMatrix> {
    let e = eig_hermitian(m)?;
    spectral_function(&e, kind)
}

pub(crate) fn spectral_function(e: &EigenDecomposition, kind: MatrixFunction) -> Result<ComplexMatrix> {
    let top = e.max().max(0.0);
    if e.min() < -PSD_TOL * top.max(1.0) {
        return Err(Error::NotPsd(e.min()));
    }
    let cut = rank_tol(top);
    match kind {
        MatrixFunction::Sqrt => Ok(e.apply(|l| if l > cut { l.sqrt() } else { 0.0 })),
        MatrixFunction::InvSqrt => Ok(e.apply(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 })),
        MatrixFunction::Pinv => Ok(e.apply(|l| if l > cut { 1.0 / l } else { 0.0 })),
        MatrixFunction::Inv => {
            if e.min() <= cut {
                return Err(Error::Singular(e.min()));
            }
            Ok(e.apply(|l| 1.0 / l))
        }
    }
}

/// Inverse of an invertible Hermitian matrix together with its spectral
/// condition number.
pub(crate) fn hermitian_inverse(m: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let e = eig_hermitian_lenient(m);
    let smallest = e.values.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
    let largest = e.values.iter().map(|l| l.abs()).fold(0.0, f64::max);
    if smallest <= rank_tol(largest) {
        return Err(Error::Singular(smallest));
    }
    Ok((e.apply(|l| 1.0 / l), largest / smallest))
}

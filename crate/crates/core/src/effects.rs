//! Effects, states, rays and weak atoms on `ℂⁿ`.
//!
//! An effect is a Hermitian `E` with `0 ≤ E ≤ I`. The algebra carries the
//! Löwner order and the orthocomplement `E ↦ I − E`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, inner, norm, rank_tol, ComplexMatrix, EigenDecomposition, MatrixDoc, PSD_TOL,
};

/// Eigenvalues within this distance of `{0, 1}` count as sharp.
pub const SHARP_TOL: f64 = 1e-7;
/// A ray whose component outside `range(E)` exceeds this has zero strength.
pub const RANGE_TOL: f64 = 1e-7;
pub const STATE_TOL: f64 = 1e-12;
pub const RAY_NORM_TOL: f64 = 1e-12;
/// Rays compare equal when `|<u, v>| ≥ 1 − RAY_EQ_TOL`.
pub const RAY_EQ_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    matrix: ComplexMatrix,
}

impl Effect {
    /// Validates `0 ≤ M ≤ I` up to the PSD tolerance; eigenvalues slightly
    /// outside `[0, 1]` are clamped.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let e = eig_hermitian(&matrix)?;
        let (min, max) = (e.min(), e.max());
        if min < -PSD_TOL || max > 1.0 + PSD_TOL {
            return Err(Error::NotEffect { min, max });
        }
        if min < 0.0 || max > 1.0 {
            return Ok(Self {
                matrix: e.apply(|l| l.clamp(0.0, 1.0)),
            });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_trusted(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_trusted(ComplexMatrix::identity(n))
    }

    /// `λ I`; `λ` is clamped to `[0, 1]`.
    pub fn scalar(n: usize, lambda: f64) -> Self {
        Self::from_trusted(ComplexMatrix::identity(n).scale(lambda.clamp(0.0, 1.0)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn spectrum(&self) -> EigenDecomposition {
        eig_hermitian(&self.matrix).expect("effects are Hermitian")
    }

    /// `I − E`.
    pub fn orthocomplement(&self) -> Self {
        let n = self.dim();
        Self::from_trusted(&ComplexMatrix::identity(n) - &self.matrix)
    }

    /// `sup { t ∈ [0, 1] : t P_r ≤ E }`.
    ///
    /// Zero when `r` has a component outside `range(E)`; otherwise
    /// `min(1, 1 / <r, E⁺ r>)`.
    pub fn strength(&self, r: &Ray) -> Result<f64> {
        let n = self.dim();
        if r.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.dim(),
            });
        }
        let e = self.spectrum();
        let cut = rank_tol(e.max());
        let mut outside = 0.0;
        let mut quad = 0.0;
        for k in 0..n {
            let c = inner(r.vector(), &e.vector(k)).norm_sqr();
            if e.values[k] > cut {
                quad += c / e.values[k];
            } else {
                outside += c;
            }
        }
        if outside.sqrt() > RANGE_TOL || quad == 0.0 {
            return Ok(0.0);
        }
        Ok((1.0 / quad).min(1.0))
    }

    pub fn is_sharp(&self) -> bool {
        self.spectrum()
            .values
            .iter()
            .all(|&l| l.abs() <= SHARP_TOL || (l - 1.0).abs() <= SHARP_TOL)
    }

    pub fn rank(&self) -> usize {
        let e = self.spectrum();
        let cut = rank_tol(e.max());
        e.values.iter().filter(|&&l| l > cut).count()
    }

    /// `tr(E D)`.
    pub fn trace_pair(&self, d: &State) -> Result<f64> {
        trace_pair(self, d)
    }

    pub fn to_json(&self) -> String {
        tagged_json(&self.matrix, "effect")
    }

    /// Accepts an optional `"kind"` of `"effect"` or `"projection"`.
    pub fn from_json(s: &str) -> Result<Self> {
        Self::new(load_tagged(s, &["effect", "projection"])?)
    }
}

/// `tr(E D)`; the imaginary part vanishes for Hermitian arguments.
pub fn trace_pair(e: &Effect, d: &State) -> Result<f64> {
    let n = e.dim();
    d.matrix().ensure_dim(n)?;
    Ok(trace_of_product(e.matrix(), d.matrix()).re)
}

pub(crate) fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Positive operator with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    matrix: ComplexMatrix,
}

impl State {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let e = eig_hermitian(&matrix)?;
        if e.min() < -STATE_TOL {
            return Err(Error::NotState(format!("negative eigenvalue {:e}", e.min())));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::NotState(format!("trace {tr}")));
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// `I / n`.
    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n).scale(1.0 / n as f64),
        }
    }

    pub fn pure(r: &Ray) -> Self {
        Self {
            matrix: r.projection(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// True when the spectrum spread is within `tol`.
    pub fn is_scalar(&self, tol: f64) -> bool {
        let e = eig_hermitian(&self.matrix).expect("states are Hermitian");
        e.max() - e.min() <= tol
    }

    pub fn to_json(&self) -> String {
        tagged_json(&self.matrix, "state")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::new(load_tagged(s, &["state"])?)
    }
}

/// Unit vector representing a one-dimensional subspace.
#[derive(Clone, Debug)]
pub struct Ray {
    vector: Vec<Complex64>,
}

impl Ray {
    pub fn new(vector: Vec<Complex64>) -> Result<Self> {
        let n = norm(&vector);
        if vector.is_empty() || (n - 1.0).abs() > RAY_NORM_TOL {
            return Err(Error::NotRay(n));
        }
        Ok(Self { vector })
    }

    /// Normalizes a nonzero vector.
    pub fn from_vector(vector: &[Complex64]) -> Result<Self> {
        let n = norm(vector);
        if vector.is_empty() || !(n > 1e-300) || !n.is_finite() {
            return Err(Error::NotRay(n));
        }
        Ok(Self {
            vector: vector.iter().map(|z| z / n).collect(),
        })
    }

    pub fn basis(n: usize, i: usize) -> Self {
        Self {
            vector: crate::linalg::basis_vector(n, i),
        }
    }

    pub fn vector(&self) -> &[Complex64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// `|<u, v>|`, the phase-invariant overlap.
    pub fn overlap(&self, other: &Ray) -> f64 {
        inner(&self.vector, &other.vector).norm()
    }

    /// Rank-one projection `r r*`.
    pub fn projection(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.vector, &self.vector)
    }

    pub fn as_column(&self) -> ComplexMatrix {
        ComplexMatrix::column_vector(&self.vector)
    }

    pub fn to_json(&self) -> String {
        tagged_json(&self.as_column(), "ray")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m = load_tagged(s, &["ray"])?;
        if m.cols() != 1 {
            return Err(Error::NotRay(f64::NAN));
        }
        Self::new(m.column(0))
    }

    /// Range of a rank-one effect: eigenvector of its largest eigenvalue.
    pub fn dominant(m: &ComplexMatrix) -> Result<Self> {
        let e = eig_hermitian(m)?;
        Self::from_vector(&e.vector(e.dim() - 1))
    }
}

impl PartialEq for Ray {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.overlap(other) >= 1.0 - RAY_EQ_TOL
    }
}

/// `coefficient · P_ray`, an effect of rank at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakAtom {
    pub coefficient: f64,
    pub ray: Ray,
}

impl WeakAtom {
    pub fn new(coefficient: f64, ray: Ray) -> Result<Self> {
        if !(0.0..=1.0).contains(&coefficient) {
            return Err(Error::NotEffect {
                min: coefficient,
                max: coefficient,
            });
        }
        Ok(Self { coefficient, ray })
    }

    pub fn effect(&self) -> Effect {
        Effect::from_trusted(self.ray.projection().scale(self.coefficient))
    }
}

pub(crate) fn tagged_json(m: &ComplexMatrix, kind: &str) -> String {
    serde_json::to_string(&MatrixDoc::from_matrix(m, Some(kind))).expect("matrix serialization is infallible")
}

/// Parses a matrix document; a present `"kind"` must be one of `accepted`.
pub(crate) fn load_tagged(s: &str, accepted: &[&str]) -> Result<ComplexMatrix> {
    let doc: MatrixDoc = serde_json::from_str(s)?;
    if let Some(kind) = &doc.kind {
        if !accepted.contains(&kind.as_str()) {
            return Err(Error::Config(format!(
                "field `kind`: expected one of {accepted:?}, found {kind:?}"
            )));
        }
    }
    doc.into_matrix()
}

//! Reference computations used as test oracles. They avoid the library's
//! eigensolver where possible: positivity is decided by Cholesky
//! factorization and inverses by Gauss–Jordan elimination.

#![allow(dead_code)]

use effectkit::linalg::{matrix_function, ComplexMatrix, MatrixFunction};
use effectkit::num_complex::Complex64;
use effectkit::{Effect, Ray};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Cholesky attempt on `m + shift·I`; true when every pivot is positive.
pub fn cholesky_psd(m: &ComplexMatrix, shift: f64) -> bool {
    let n = m.rows();
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = m[(j, j)].re + shift;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj.into();
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    true
}

/// Largest `t ∈ [0, 1]` with `t·P_r ≤ E`, by 60 bisection steps on a
/// Cholesky positivity test.
pub fn bisection_strength(e: &ComplexMatrix, r: &Ray) -> f64 {
    let p = r.projection();
    let shift = 1e-11;
    if cholesky_psd(&(e - &p), shift) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cholesky_psd(&(e - &p.scale(mid)), shift) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn gj_inverse(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        assert!(a[(piv, col)].norm() > 1e-300, "singular matrix in oracle");
        for k in 0..n {
            let (x, y) = (a[(col, k)], a[(piv, k)]);
            a[(col, k)] = y;
            a[(piv, k)] = x;
            let (x, y) = (inv[(col, k)], inv[(piv, k)]);
            inv[(col, k)] = y;
            inv[(piv, k)] = x;
        }
        let d = a[(col, col)];
        for k in 0..n {
            a[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[(i, col)];
                if f != Complex64::new(0.0, 0.0) {
                    for k in 0..n {
                        let (ack, ick) = (a[(col, k)], inv[(col, k)]);
                        a[(i, k)] -= f * ack;
                        inv[(i, k)] -= f * ick;
                    }
                }
            }
        }
    }
    inv
}

/// The order-preserving map evaluated literally:
/// `S^{-1/2}((I − T² + T(I+E)^{-1}T)^{-1} − I)S^{-1/2}`, `S = T²(2I − T²)^{-1}`.
pub fn mk_literal(t: &ComplexMatrix, e: &ComplexMatrix) -> ComplexMatrix {
    let n = t.rows();
    let id = ComplexMatrix::identity(n);
    let t2 = t * t;
    let s = &t2 * &gj_inverse(&(&id.scale(2.0) - &t2));
    let s_inv_half = matrix_function(&s.hermitian_part(), MatrixFunction::InvSqrt).unwrap();
    let inner = &(&id - &t2) + &(&(t * &gj_inverse(&(&id + e))) * t);
    let mid = &gj_inverse(&inner) - &id;
    (&(&s_inv_half * &mid) * &s_inv_half).hermitian_part()
}

/// Same map in congruence form `R (E^{-1} + I − T²)^{-1} R` with
/// `R = (2I − T²)^{1/2}`, written without inverting `E`:
/// `R E^{1/2} (I + E^{1/2}(I − T²)E^{1/2})^{-1} E^{1/2} R`.
pub fn mk_congruence(t: &ComplexMatrix, e: &ComplexMatrix) -> ComplexMatrix {
    let n = t.rows();
    let id = ComplexMatrix::identity(n);
    let t2 = (t * t).hermitian_part();
    let r = matrix_function(&(&id.scale(2.0) - &t2), MatrixFunction::Sqrt).unwrap();
    let h = matrix_function(e, MatrixFunction::Sqrt).unwrap();
    let core = &id + &(&(&h * &(&id - &t2)) * &h);
    let x = &(&h * &gj_inverse(&core)) * &h;
    (&(&r * &x) * &r).hermitian_part()
}

/// Inverse of [`mk_congruence`]: with `Z = R^{-1} Y R^{-1}`,
/// `E = Z^{1/2}(I − Z^{1/2}(I − T²)Z^{1/2})^{-1}Z^{1/2}`.
pub fn mk_congruence_inverse(t: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    let n = t.rows();
    let id = ComplexMatrix::identity(n);
    let t2 = (t * t).hermitian_part();
    let r_inv = matrix_function(&(&id.scale(2.0) - &t2), MatrixFunction::InvSqrt).unwrap();
    let z = (&(&r_inv * y) * &r_inv).hermitian_part();
    let h = matrix_function(&z, MatrixFunction::Sqrt).unwrap();
    let core = &id - &(&(&h * &(&id - &t2)) * &h);
    (&(&h * &gj_inverse(&core)) * &h).hermitian_part()
}

/// Scalar reduction on a common eigenvector: `f(e) = e(2 − t²)/(1 + e(1 − t²))`.
pub fn mk_scalar(t: f64, e: f64) -> f64 {
    let t2 = t * t;
    e * (2.0 - t2) / (1.0 + e * (1.0 - t2))
}

/// Gram–Schmidt of a single vector against the standard basis, giving the
/// orthonormal direction of `v`.
pub fn unit(v: &[Complex64]) -> Vec<Complex64> {
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

pub fn effect(m: ComplexMatrix) -> Effect {
    Effect::new(m).unwrap()
}

/// `|<u, v>|` for unit vectors.
pub fn overlap(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum::<Complex64>().norm()
}

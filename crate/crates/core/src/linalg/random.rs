//! Seeded generators for unitaries, effects, states, projections and rays.
//!
//! The generator is ChaCha8 seeded through `seed_from_u64`. Parallel trials
//! draw from independent ChaCha streams of a per-run base seed, so results
//! do not depend on scheduling.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::eig::eig_hermitian_lenient;
use super::matrix::{inner, norm, ComplexMatrix};
use super::MatrixFunction;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream `index` of `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Standard complex Gaussian, `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal()) * std::f64::consts::FRAC_1_SQRT_2
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::BadDimension(dim))
    } else {
        Ok(())
    }
}

pub fn complex_gaussian_matrix(rows: usize, cols: usize, rng: &mut RandomSource) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_normal())
}

pub fn random_unit_vector(dim: usize, rng: &mut RandomSource) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| rng.complex_normal()).collect();
        let n = norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal of `R` made positive (Gram–Schmidt produces exactly that).
pub fn haar_unitary(dim: usize, rng: &mut RandomSource) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    loop {
        let z = complex_gaussian_matrix(dim, dim, rng);
        let mut q = ComplexMatrix::zeros(dim, dim);
        let mut ok = true;
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut v = z.column(j);
            for _ in 0..2 {
                for b in &cols {
                    let c = inner(&v, b);
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= c * bi;
                    }
                }
            }
            let n = norm(&v);
            if n < 1e-10 {
                ok = false;
                break;
            }
            let v: Vec<Complex64> = v.into_iter().map(|x| x / n).collect();
            q.set_column(j, &v);
            cols.push(v);
        }
        if ok {
            return Ok(q);
        }
    }
}

/// `U diag(values) U*` for a Haar `U`.
pub fn rotated_diagonal(values: &[f64], rng: &mut RandomSource) -> Result<ComplexMatrix> {
    let u = haar_unitary(values.len(), rng)?;
    Ok(ComplexMatrix::diag_real(values).congruence(&u)?.hermitian_part())
}

/// Effect with eigenvalues uniform on `[0, 1]`.
pub fn random_effect_matrix(dim: usize, rng: &mut RandomSource) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    let values: Vec<f64> = (0..dim).map(|_| rng.uniform()).collect();
    rotated_diagonal(&values, rng)
}

/// Effect of the given rank: `rank` eigenvalues uniform on `(0, 1]`, the rest zero.
pub fn random_effect_of_rank(dim: usize, rank: usize, rng: &mut RandomSource) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    if rank > dim {
        return Err(Error::BadDimension(rank));
    }
    let values: Vec<f64> = (0..dim)
        .map(|i| if i < rank { rng.uniform_range(0.05, 1.0) } else { 0.0 })
        .collect();
    rotated_diagonal(&values, rng)
}

/// Effect whose spectrum lies in `[lo, hi]`.
pub fn random_effect_in(dim: usize, lo: f64, hi: f64, rng: &mut RandomSource) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    let values: Vec<f64> = (0..dim).map(|_| rng.uniform_range(lo, hi)).collect();
    rotated_diagonal(&values, rng)
}

/// Density matrix with Dirichlet(1, …, 1) spectrum, trace normalized.
pub fn random_state_matrix(dim: usize, rng: &mut RandomSource) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    let mut w: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.uniform()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    let d = rotated_diagonal(&w, rng)?;
    let tr = d.trace().re;
    Ok(d.scale(1.0 / tr))
}

pub fn random_projection_matrix(dim: usize, rank: usize, rng: &mut RandomSource) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    if rank > dim {
        return Err(Error::BadDimension(rank));
    }
    let u = haar_unitary(dim, rng)?;
    let mut p = ComplexMatrix::zeros(dim, dim);
    for k in 0..rank {
        let c = u.column(k);
        p = &p + &ComplexMatrix::outer(&c, &c);
    }
    Ok(p.hermitian_part())
}

pub fn random_hermitian(dim: usize, rng: &mut RandomSource) -> ComplexMatrix {
    complex_gaussian_matrix(dim, dim, rng).hermitian_part()
}

pub fn random_psd(dim: usize, rng: &mut RandomSource) -> ComplexMatrix {
    let g = complex_gaussian_matrix(dim, dim, rng);
    (&g * &g.adjoint()).hermitian_part()
}

/// Spectral condition number `σ_max / σ_min`.
pub fn condition_number(a: &ComplexMatrix) -> f64 {
    let g = eig_hermitian_lenient(&(&a.adjoint() * a));
    (g.max().max(0.0) / g.min().max(0.0)).sqrt()
}

/// Complex Gaussian matrix, regenerated until its condition number is at
/// most `max_cond`.
pub fn random_invertible(dim: usize, max_cond: f64, rng: &mut RandomSource) -> Result<ComplexMatrix> {
    check_dim(dim)?;
    loop {
        let a = complex_gaussian_matrix(dim, dim, rng);
        if condition_number(&a) <= max_cond {
            return Ok(a);
        }
    }
}

/// Löwner-comparable pair `(E, F)` with `0 ≤ E ≤ F ≤ I`, built as
/// `E = F^{1/2} K F^{1/2}` for independent effects `F`, `K`.
pub fn ordered_effect_pair(dim: usize, rng: &mut RandomSource) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let f = random_effect_matrix(dim, rng)?;
    let k = random_effect_matrix(dim, rng)?;
    let root = super::matrix_function(&f, MatrixFunction::Sqrt)?;
    let e = (&(&root * &k) * &root).hermitian_part();
    Ok((e, f))
}

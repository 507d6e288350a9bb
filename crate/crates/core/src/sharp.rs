//! Projection lattice, semilinear operators and the maps they induce on
//! subspaces, with the verification harness for maps `P ↦ P_{A(range P)}`
//! that respect a pair of states.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::effects::{trace_of_product, Ray, State};
use crate::error::{Error, Result};
use crate::linalg::random::{haar_unitary, random_invertible, random_projection_matrix, random_unit_vector};
use crate::linalg::{
    conj_vec, eig_hermitian, inner, norm, orthonormal_span, projector, rank_tol, ComplexMatrix,
    RandomSource, MatrixDoc,
};
use crate::reconstruction::{Kind, PipelineConfig, RayMap};
use crate::report::{
    ClassificationReport, FinalVerdict, MapReport, Probe, ProbeOutcome, StageResult, Verdict, Witness, TOOL_VERSION,
};
use crate::trials::run_trials;

pub const IDEMPOTENT_TOL: f64 = 1e-9;
pub const PROJ_LEQ_TOL: f64 = 1e-8;
/// Smallest allowed ratio of extreme singular values.
pub const INVERTIBLE_TOL: f64 = 1e-9;
/// Tolerance of the ratio and polarized identities.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Relative eigenvalue spread of `A*A` below which it counts as scalar.
pub const SCALAR_SPREAD_TOL: f64 = 1e-7;
/// Eigenvalue spread of `D` below which it counts as scalar.
pub const SCALAR_STATE_TOL: f64 = 1e-10;
pub const INDUCED_TOL: f64 = 1e-7;
pub const INDUCED_TRIALS: usize = 100;
/// Projections sampled by the scalar-state demonstration.
pub const DEMO_SAMPLES: usize = 200;
pub const TWIST_SAMPLES: usize = 500;
/// Image overlap of the orthogonal probe pair that counts as broken
/// orthogonality in the twist demonstration.
pub const TWIST_OVERLAP_MIN: f64 = 0.1;

pub const STAGE_SCALARITY: &str = "1_state_scalarity";
pub const STAGE_PROJ_TRACE: &str = "2_projection_trace";
pub const STAGE_IDENTITIES: &str = "3_identities";
pub const STAGE_EXTRACT: &str = "4_scalar_gram";
pub const STAGE_INDUCED: &str = "5_induced_map";
pub const STAGE_FORCED: &str = "forced_state";
pub const STAGE_NON_UNITARY: &str = "non_unitary_witness";
pub const STAGE_TWIST_TRACE: &str = "twist_trace";
pub const STAGE_TWIST_ORTHO: &str = "twist_orthogonality";

/// `x ↦ A x`, or `x ↦ A conj(x)` when `conjugating`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemilinearOperator {
    matrix: ComplexMatrix,
    conjugating: bool,
}

#[derive(Deserialize)]
struct SemilinearDoc {
    matrix: MatrixDoc,
    conjugating: bool,
}

impl SemilinearOperator {
    pub fn new(matrix: ComplexMatrix, conjugating: bool) -> Result<Self> {
        let n = matrix.dim()?;
        if n == 0 {
            return Err(Error::BadDimension(0));
        }
        let g = eig_hermitian(&gram_of(&matrix))?;
        if !(g.min() > INVERTIBLE_TOL * INVERTIBLE_TOL * g.max()) {
            return Err(Error::Singular((g.min().max(0.0) / g.max()).sqrt()));
        }
        Ok(Self { matrix, conjugating })
    }

    pub fn linear(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix, false)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn conjugating(&self) -> bool {
        self.conjugating
    }

    pub fn kind(&self) -> Kind {
        if self.conjugating {
            Kind::Antilinear
        } else {
            Kind::Linear
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.matrix.scale(c), self.conjugating)
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        if self.conjugating {
            self.matrix.mul_vec(&conj_vec(x))
        } else {
            self.matrix.mul_vec(x)
        }
    }

    /// Matrix `G` of the composite `A*A`, so that `<Ax, Ay> = <Gx, y>` for
    /// linear `A` and `conj(<Gx, y>)` for conjugating `A`.
    pub fn gram(&self) -> ComplexMatrix {
        let g = gram_of(&self.matrix);
        if self.conjugating {
            g.conj()
        } else {
            g
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SemilinearDoc = serde_json::from_str(s)?;
        Self::new(doc.matrix.into_matrix()?, doc.conjugating)
    }
}

fn gram_of(m: &ComplexMatrix) -> ComplexMatrix {
    (&m.adjoint() * m).hermitian_part()
}

/// Random invertible operator with condition number at most 100.
pub fn random_semilinear(dim: usize, rng: &mut RandomSource) -> Result<SemilinearOperator> {
    let m = random_invertible(dim, 100.0, rng)?;
    let conjugating = rng.bernoulli(0.5);
    SemilinearOperator::new(m, conjugating)
}

/// `c·U` with `U` Haar distributed.
pub fn random_scaled_unitary(dim: usize, c: f64, conjugating: bool, rng: &mut RandomSource) -> Result<SemilinearOperator> {
    SemilinearOperator::new(haar_unitary(dim, rng)?.scale(c), conjugating)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceProjection {
    matrix: ComplexMatrix,
    rank: usize,
}

impl SubspaceProjection {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.dim()?;
        let herm = matrix.hermitian_residual();
        let sq = &matrix * &matrix;
        let idem = sq.distance(&matrix);
        if herm > IDEMPOTENT_TOL || idem > IDEMPOTENT_TOL {
            return Err(Error::NotProjection(format!(
                "hermitian residual {herm:.3e}, idempotence residual {idem:.3e}"
            )));
        }
        let matrix = matrix.hermitian_part();
        let rank = eig_hermitian(&matrix)?.values.iter().filter(|&&l| l > 0.5).count();
        debug_assert!(rank <= n);
        Ok(Self { matrix, rank })
    }

    /// Projection onto the span of `vectors`; near-dependent vectors are
    /// dropped at `rank_tol`.
    pub fn span(vectors: &[Vec<Complex64>], n: usize) -> Self {
        let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
        let basis = orthonormal_span(vectors, rank_tol(scale));
        Self {
            matrix: projector(&basis, n),
            rank: basis.len(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(n, n),
            rank: 0,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
            rank: n,
        }
    }

    pub fn of_ray(r: &Ray) -> Self {
        Self {
            matrix: r.projection(),
            rank: 1,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Orthonormal basis of the range.
    pub fn basis(&self) -> Vec<Vec<Complex64>> {
        let e = eig_hermitian(&self.matrix).expect("projections are Hermitian");
        (0..e.dim()).filter(|&k| e.values[k] > 0.5).map(|k| e.vector(k)).collect()
    }

    pub fn complement(&self) -> Self {
        let n = self.dim();
        Self {
            matrix: &ComplexMatrix::identity(n) - &self.matrix,
            rank: n - self.rank,
        }
    }
}

pub fn join(p: &SubspaceProjection, q: &SubspaceProjection) -> Result<SubspaceProjection> {
    let n = p.dim();
    q.matrix.ensure_dim(n)?;
    let mut vs = p.basis();
    vs.extend(q.basis());
    Ok(SubspaceProjection::span(&vs, n))
}

/// `(P^⊥ ∨ Q^⊥)^⊥`.
pub fn meet(p: &SubspaceProjection, q: &SubspaceProjection) -> Result<SubspaceProjection> {
    Ok(join(&p.complement(), &q.complement())?.complement())
}

/// `range P ⊆ range Q`, tested as `‖QP − P‖_F ≤ 1e−8`.
pub fn proj_leq(p: &SubspaceProjection, q: &SubspaceProjection) -> Result<bool> {
    q.matrix.ensure_dim(p.dim())?;
    Ok((&q.matrix * &p.matrix).distance(&p.matrix) <= PROJ_LEQ_TOL)
}

/// Projection onto `A(range P)`.
pub fn induced_map(a: &SemilinearOperator, p: &SubspaceProjection) -> Result<SubspaceProjection> {
    let n = a.dim();
    p.matrix.ensure_dim(n)?;
    let images: Vec<Vec<Complex64>> = p.basis().iter().map(|v| a.apply_vec(v)).collect();
    Ok(SubspaceProjection::span(&images, n))
}

fn induced_matrix(a: &SemilinearOperator, p: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(induced_map(a, &SubspaceProjection::new(p.clone())?)?.matrix)
}

fn quad(m: &ComplexMatrix, x: &[Complex64]) -> f64 {
    inner(&m.mul_vec(x), x).re
}

/// `‖√D′ Ax‖² / ‖Ax‖² − ‖√D x‖² / ‖x‖²`.
fn ratio_defect(a: &SemilinearOperator, d: &State, d_prime: &State, x: &[Complex64]) -> f64 {
    let ax = a.apply_vec(x);
    quad(d_prime.matrix(), &ax) / inner(&ax, &ax).re - quad(d.matrix(), x) / inner(x, x).re
}

/// `tr(φ(P_x) D′) − tr(P_x D)` through the projection matrices.
fn rank_one_trace_defect(a: &SemilinearOperator, d: &State, d_prime: &State, x: &[Complex64]) -> Result<f64> {
    let rx = Ray::from_vector(x)?;
    let img = Ray::from_vector(&a.apply_vec(x))?;
    Ok(trace_of_product(&img.projection(), d_prime.matrix()).re - trace_of_product(&rx.projection(), d.matrix()).re)
}

fn projection_trace_outcome(a: &SemilinearOperator, d: &State, d_prime: &State, p: &ComplexMatrix, tol: f64) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let img = induced_matrix(a, p)?;
        Ok((trace_of_product(&img, d_prime.matrix()).re - trace_of_product(p, d.matrix()).re).abs())
    };
    eval().map_or_else(|_| crate::trials::evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

fn check_dims(a: &SemilinearOperator, d: &State, d_prime: &State) -> Result<usize> {
    let n = a.dim();
    d.matrix().ensure_dim(n)?;
    d_prime.matrix().ensure_dim(n)?;
    Ok(n)
}

/// Trace condition `tr(φ(P) D′) = tr(P D)` on random projections of every
/// rank `1..n−1`, for `φ` induced by `A`.
pub fn check_projection_trace(
    a: &SemilinearOperator,
    d: &State,
    d_prime: &State,
    samples: usize,
    tol: f64,
    rng: &mut RandomSource,
) -> Result<MapReport> {
    let n = check_dims(a, d, d_prime)?;
    let base = rng.next_u64();
    let ranks = n.saturating_sub(1).max(1);
    let probes = run_trials(base, samples, false, |i, rng| -> Result<_> {
        let p = random_projection_matrix(n, 1 + i % ranks, rng)?;
        let o = projection_trace_outcome(a, d, d_prime, &p, tol);
        Ok((Probe::ProjectionTrace { p }, o))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(MapReport::from_outcomes("projection_trace", samples, base, tol, probes))
}

/// Ratio identity `‖√D′Ax‖²/‖Ax‖² = ‖√D x‖²/‖x‖²` on `(e₁ + e₂)/√2`,
/// random `x` and superpositions `x + λy`. The metric `equivalence_gap` is the largest
/// difference between the ratio residual and the rank-one trace residual.
pub fn check_ratio_identity(
    a: &SemilinearOperator,
    d: &State,
    d_prime: &State,
    samples: usize,
    rng: &mut RandomSource,
) -> Result<MapReport> {
    if samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    let n = check_dims(a, d, d_prime)?;
    let base = rng.next_u64();
    let rows = run_trials(base, samples, false, |_, rng| -> Result<_> {
        let x = random_unit_vector(n, rng);
        let y = random_unit_vector(n, rng);
        let lambda = rng.complex_normal();
        let z: Vec<Complex64> = x.iter().zip(&y).map(|(a, b)| a + lambda * b).collect();
        let mut out = Vec::with_capacity(2);
        for v in [x, z] {
            if norm(&v) < 1e-8 {
                continue;
            }
            let r = ratio_defect(a, d, d_prime, &v);
            let t = rank_one_trace_defect(a, d, d_prime, &v)?;
            out.push((v, r, (r - t).abs()));
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut fixed = Vec::new();
    if n >= 2 {
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        x[0] = FRAC_1_SQRT_2.into();
        x[1] = FRAC_1_SQRT_2.into();
        let r = ratio_defect(a, d, d_prime, &x);
        let t = rank_one_trace_defect(a, d, d_prime, &x)?;
        fixed.push((x, r, (r - t).abs()));
    }
    let mut gap = 0.0f64;
    let probes = fixed.into_iter().chain(rows.into_iter().flatten()).map(|(v, r, g)| {
        gap = gap.max(g);
        (
            Probe::RatioIdentity {
                x: ComplexMatrix::column_vector(&v),
            },
            ProbeOutcome::above(r.abs(), IDENTITY_TOL),
        )
    });
    let mut report = MapReport::from_outcomes("ratio_identity", samples, base, IDENTITY_TOL, probes.collect::<Vec<_>>());
    report.metrics.insert("equivalence_gap".into(), gap);
    Ok(report)
}

/// Two sub-reports: the polarized form
/// `<D′Ax, Ax><x, x> = <Dx, x><Ax, Ax>` on random `x`, and the
/// orthogonality consequence `<x, y> = 0 ⇒ <Dx, y><A*Ax, y> = 0` on
/// random orthogonal pairs plus pairs built from `D`'s eigenbasis.
pub fn check_polarized_identity(
    a: &SemilinearOperator,
    d: &State,
    d_prime: &State,
    samples: usize,
    rng: &mut RandomSource,
) -> Result<(MapReport, MapReport)> {
    if samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    let n = check_dims(a, d, d_prime)?;
    let gram = a.gram();
    let de = eig_hermitian(d.matrix())?;

    let base = rng.next_u64();
    let polar = run_trials(base, samples, false, |_, rng| {
        let x = random_unit_vector(n, rng);
        let ax = a.apply_vec(&x);
        let r = (quad(d_prime.matrix(), &ax) * inner(&x, &x).re - quad(d.matrix(), &x) * inner(&ax, &ax).re).abs();
        (
            Probe::PolarizedIdentity {
                x: ComplexMatrix::column_vector(&x),
            },
            ProbeOutcome::above(r, IDENTITY_TOL),
        )
    });
    let polar = MapReport::from_outcomes("polarized_identity", samples, base, IDENTITY_TOL, polar);

    let pair = |x: &[Complex64], y: &[Complex64]| {
        let r = (inner(&d.matrix().mul_vec(x), y) * inner(&gram.mul_vec(x), y)).norm();
        (
            Probe::OrthogonalPair {
                x: ComplexMatrix::column_vector(x),
                y: ComplexMatrix::column_vector(y),
            },
            ProbeOutcome::above(r, IDENTITY_TOL),
        )
    };
    let mut probes = Vec::new();
    if n >= 2 {
        let s = FRAC_1_SQRT_2;
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let mut y = x.clone();
        x[0] = s.into();
        x[1] = s.into();
        y[0] = s.into();
        y[1] = (-s).into();
        probes.push(pair(&x, &y));
    }
    let base2 = rng.next_u64();
    let sampled = run_trials(base2, samples, false, |_, rng| {
        let mut out = Vec::new();
        let x = random_unit_vector(n, rng);
        let mut y = random_unit_vector(n, rng);
        let c = inner(&y, &x);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi -= c * xi;
        }
        if norm(&y) > 1e-8 {
            let y = crate::linalg::normalized(&y);
            out.push(pair(&x, &y));
        }
        // y = conj(c_k) d_j − conj(c_j) d_k in the eigenbasis of D
        if n >= 2 {
            let j = rng.index(n);
            let k = (j + 1 + rng.index(n - 1)) % n;
            let (dj, dk) = (de.vector(j), de.vector(k));
            let (cj, ck) = (inner(&x, &dj), inner(&x, &dk));
            let z: Vec<Complex64> = dj.iter().zip(&dk).map(|(a, b)| ck.conj() * a - cj.conj() * b).collect();
            if norm(&z) > 1e-8 {
                out.push(pair(&x, &crate::linalg::normalized(&z)));
            }
        }
        out
    });
    probes.extend(sampled.into_iter().flatten());
    let ortho = MapReport::from_outcomes("orthogonality_consequence", samples, base2, IDENTITY_TOL, probes);
    Ok((polar, ortho))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ScalarExtraction {
    /// `A*A = μI`; `operator` is `A/√μ`.
    Scalar {
        mu: f64,
        spread: f64,
        operator: SemilinearOperator,
    },
    /// Eigenvectors of `A*A` for its extreme eigenvalues give the
    /// orthogonal pair `x = (v_min + v_max)/√2`, `y = (v_min − v_max)/√2`
    /// with `<A*Ax, y> ≠ 0`.
    NotScalar {
        x: Vec<Complex64>,
        y: Vec<Complex64>,
        spread: f64,
    },
}

impl<'de> Deserialize<'de> for SemilinearOperator {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let doc = SemilinearDoc::deserialize(de)?;
        let m = doc.matrix.into_matrix().map_err(serde::de::Error::custom)?;
        Self::new(m, doc.conjugating).map_err(serde::de::Error::custom)
    }
}

pub fn extract_unitary(a: &SemilinearOperator, tol: f64) -> Result<ScalarExtraction> {
    let g = eig_hermitian(&gram_of(a.matrix()))?;
    let (lo, hi) = (g.min(), g.max());
    if !(lo > INVERTIBLE_TOL * INVERTIBLE_TOL * hi) {
        return Err(Error::Singular((lo.max(0.0) / hi).sqrt()));
    }
    let spread = (hi - lo) / hi;
    if spread <= tol {
        let mu = g.values.iter().sum::<f64>() / g.dim() as f64;
        let operator = SemilinearOperator {
            matrix: a.matrix().scale(1.0 / mu.sqrt()),
            conjugating: a.conjugating(),
        };
        return Ok(ScalarExtraction::Scalar { mu, spread, operator });
    }
    let (vmin, vmax) = (g.vector(0), g.vector(g.dim() - 1));
    let mut x: Vec<Complex64> = vmin.iter().zip(&vmax).map(|(a, b)| (a + b) * FRAC_1_SQRT_2).collect();
    let mut y: Vec<Complex64> = vmin.iter().zip(&vmax).map(|(a, b)| (a - b) * FRAC_1_SQRT_2).collect();
    if a.conjugating() {
        // witness for the conjugated Gram matrix
        x = conj_vec(&x);
        y = conj_vec(&y);
    }
    Ok(ScalarExtraction::NotScalar { x, y, spread })
}

fn induced_outcome(a: &SemilinearOperator, p: &ComplexMatrix, u: &SemilinearOperator) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let img = induced_matrix(a, p)?;
        let q = if u.conjugating() { p.conj() } else { p.clone() };
        Ok(img.distance(&q.congruence(u.matrix())?))
    };
    eval().map_or_else(|_| crate::trials::evaluation_failed(), |r| ProbeOutcome::above(r, INDUCED_TOL))
}

/// The documented non-unitary operator `diag(1, 2, …, n)`.
pub fn demonstration_operator(n: usize) -> SemilinearOperator {
    let diag: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    SemilinearOperator::linear(ComplexMatrix::diag_real(&diag)).expect("diagonal is invertible")
}

/// Degenerate path for a scalar `D = I/n`: every rank-k projection has
/// `tr(P D) = k/n`, the condition only forces `D′ = D`, and
/// `diag(1, …, n)` satisfies it while breaking orthogonality.
fn scalar_state_stages(
    a: &SemilinearOperator,
    d: &State,
    d_prime: &State,
    config: &PipelineConfig,
    rng: &mut RandomSource,
) -> Result<Vec<StageResult>> {
    let n = a.dim();
    let samples = config.trials.max(DEMO_SAMPLES);
    let mut forced = check_projection_trace(a, d, d_prime, samples, config.trace_tol, rng)?;
    forced.check = "forced_state".into();
    forced.metrics.insert("state_distance".into(), d_prime.matrix().distance(d.matrix()));
    let forced = StageResult::from_checks(STAGE_FORCED, vec![forced]);

    let demo = demonstration_operator(n);
    let mut trace = check_projection_trace(&demo, d, d, samples, config.trace_tol, rng)?;
    trace.check = "demonstration_trace".into();
    let mut stage = StageResult::from_checks(STAGE_NON_UNITARY, vec![trace]);
    if n >= 2 {
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let mut y = x.clone();
        x[0] = FRAC_1_SQRT_2.into();
        x[1] = FRAC_1_SQRT_2.into();
        y[0] = FRAC_1_SQRT_2.into();
        y[1] = (-FRAC_1_SQRT_2).into();
        let overlap = Ray::from_vector(&demo.apply_vec(&x))?.overlap(&Ray::from_vector(&demo.apply_vec(&y))?);
        stage.data.insert("image_overlap".into(), overlap);
        stage.witnesses.push(Witness {
            probe: Probe::OrthogonalPair {
                x: ComplexMatrix::column_vector(&x),
                y: ComplexMatrix::column_vector(&y),
            },
            residual: overlap,
        });
        if overlap <= config.ortho_tol {
            stage.verdict = Verdict::Fail;
        }
    }
    Ok(vec![forced, stage])
}

/// Staged verification that the map induced by `A` on projections is a
/// unitary or antiunitary congruence, given `tr(φ(P) D′) = tr(P D)`.
pub fn theorem2_harness(
    a: &SemilinearOperator,
    d: &State,
    d_prime: &State,
    config: &PipelineConfig,
) -> Result<ClassificationReport> {
    config.validate()?;
    let n = check_dims(a, d, d_prime)?;
    let mut rng = RandomSource::new(config.seed);
    let mut stages = Vec::new();

    let spread = {
        let e = eig_hermitian(d.matrix())?;
        e.max() - e.min()
    };
    let mut scalarity = StageResult::from_checks(STAGE_SCALARITY, vec![]);
    scalarity.data.insert("state_spread".into(), spread);
    scalarity.residual = spread;
    let scalar = spread <= SCALAR_STATE_TOL;
    let report = |stages: Vec<StageResult>, final_verdict| ClassificationReport {
        tool_version: TOOL_VERSION.to_owned(),
        pipeline: "theorem2".to_owned(),
        seed: config.seed,
        dim: n,
        config: serde_json::to_value(config).expect("config serializes"),
        stages,
        final_verdict,
    };

    if scalar {
        scalarity.notes.push("state is scalar: the trace condition carries no information".into());
        stages.push(scalarity);
        let demo = scalar_state_stages(a, d, d_prime, config, &mut rng)?;
        let forced_ok = demo[0].passed();
        let demo_ok = demo[1].passed();
        stages.extend(demo);
        let verdict = if forced_ok {
            FinalVerdict::HypothesisDegenerate {
                demonstration_passed: demo_ok,
            }
        } else {
            FinalVerdict::Refuted {
                stage: STAGE_FORCED.into(),
                anomaly: false,
            }
        };
        return Ok(report(stages, verdict));
    }
    if n < 3 {
        return Err(Error::DimensionTooSmall(n, 3));
    }
    stages.push(scalarity);

    macro_rules! refute_unless {
        ($stage:expr, $anomaly:expr) => {{
            let s: StageResult = $stage;
            let ok = s.passed();
            let name = s.name.clone();
            stages.push(s);
            if !ok {
                return Ok(report(
                    stages,
                    FinalVerdict::Refuted {
                        stage: name,
                        anomaly: $anomaly,
                    },
                ));
            }
        }};
    }

    let trace = check_projection_trace(a, d, d_prime, config.trials, config.trace_tol, &mut rng)?;
    refute_unless!(StageResult::from_checks(STAGE_PROJ_TRACE, vec![trace]), false);

    let ratio = check_ratio_identity(a, d, d_prime, config.trials, &mut rng)?;
    let (polar, ortho) = check_polarized_identity(a, d, d_prime, config.trials, &mut rng)?;
    refute_unless!(StageResult::from_checks(STAGE_IDENTITIES, vec![ratio, polar, ortho]), true);

    let (mu, u) = match extract_unitary(a, config.scalar_tol)? {
        ScalarExtraction::Scalar { mu, spread, operator } => {
            let mut s = StageResult::from_checks(STAGE_EXTRACT, vec![]);
            s.residual = spread;
            s.data.insert("spread".into(), spread);
            s.data.insert("mu".into(), mu);
            stages.push(s);
            (mu, operator)
        }
        ScalarExtraction::NotScalar { x, y, spread } => {
            let mut s = StageResult::from_checks(STAGE_EXTRACT, vec![]);
            s.verdict = Verdict::Fail;
            s.residual = spread;
            s.data.insert("spread".into(), spread);
            s.notes
                .push("trace condition passed at the sampled resolution but A*A is not scalar".into());
            s.witnesses.push(Witness {
                probe: Probe::NotScalar {
                    x: ComplexMatrix::column_vector(&x),
                    y: ComplexMatrix::column_vector(&y),
                    spread,
                },
                residual: spread,
            });
            refute_unless!(s, true);
            unreachable!("failed stage returns");
        }
    };

    let trials = config.trials.max(INDUCED_TRIALS);
    let base = rng.next_u64();
    let probes = run_trials(base, trials, config.parallel, |i, rng| -> Result<_> {
        let p = random_projection_matrix(n, 1 + i % (n - 1), rng)?;
        let o = induced_outcome(a, &p, &u);
        Ok((
            Probe::InducedMap {
                p,
                unitary: u.matrix().clone(),
                kind: u.kind(),
            },
            o,
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let induced = MapReport::from_outcomes("induced_congruence", trials, base, INDUCED_TOL, probes);
    refute_unless!(StageResult::from_checks(STAGE_INDUCED, vec![induced]), false);

    Ok(report(
        stages,
        FinalVerdict::CertifiedAutomorphism {
            kind: u.kind(),
            unitary: u.matrix().clone(),
            mu: Some(mu),
        },
    ))
}

/// Re-evaluates a witness produced by [`theorem2_harness`].
pub fn replay_theorem2_witness(a: &SemilinearOperator, d: &State, d_prime: &State, w: &Witness) -> Result<ProbeOutcome> {
    check_dims(a, d, d_prime)?;
    match &w.probe {
        Probe::ProjectionTrace { p } => Ok(projection_trace_outcome(a, d, d_prime, p, crate::maps::TRACE_TOL)),
        Probe::RatioIdentity { x } => Ok(ProbeOutcome::above(
            ratio_defect(a, d, d_prime, &x.column(0)).abs(),
            IDENTITY_TOL,
        )),
        Probe::OrthogonalPair { x, y } => {
            let (x, y) = (x.column(0), y.column(0));
            let r = (inner(&d.matrix().mul_vec(&x), &y) * inner(&a.gram().mul_vec(&x), &y)).norm();
            Ok(ProbeOutcome::above(r, IDENTITY_TOL))
        }
        Probe::InducedMap { p, unitary, kind } => {
            let u = SemilinearOperator::new(unitary.clone(), *kind == Kind::Antilinear)?;
            Ok(induced_outcome(a, p, &u))
        }
        Probe::NotScalar { x, y, .. } => {
            let r = inner(&a.gram().mul_vec(&x.column(0)), &y.column(0)).norm();
            Ok(ProbeOutcome {
                residual: r,
                violated: r > 0.0,
            })
        }
        other => Err(Error::Config(format!("probe {other:?} does not belong to this harness"))),
    }
}

/// Map on rays of `ℂ²` that rotates each point of the Bloch sphere (in
/// the eigenbasis of a state) about the z axis by `κ` times its height.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistOracle {
    basis: ComplexMatrix,
    kappa: f64,
}

impl TwistOracle {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn inverse(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            kappa: -self.kappa,
        }
    }
}

impl RayMap for TwistOracle {
    fn dim(&self) -> usize {
        2
    }

    fn map_ray(&self, r: &Ray) -> Result<Ray> {
        if r.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: r.dim(),
            });
        }
        let a = self.basis.adjoint().mul_vec(r.vector());
        let height = a[0].norm_sqr() - a[1].norm_sqr();
        let b = [a[0], a[1] * Complex64::from_polar(1.0, self.kappa * height)];
        Ray::from_vector(&self.basis.mul_vec(&b))
    }
}

/// Twist oracle for a two-level state with distinct eigenvalues.
pub fn remark_dim2_twist(d: &State, kappa: f64) -> Result<TwistOracle> {
    if d.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d.dim(),
        });
    }
    if !kappa.is_finite() {
        return Err(Error::Config(format!("twist parameter must be finite, got {kappa}")));
    }
    let e = eig_hermitian(d.matrix())?;
    if e.max() - e.min() <= SCALAR_STATE_TOL {
        return Err(Error::DegenerateState);
    }
    Ok(TwistOracle {
        basis: e.vectors,
        kappa,
    })
}

/// Orthogonal pair at polar angle `π/4` in the eigenbasis of the oracle.
pub fn twist_probe_pair(oracle: &TwistOracle) -> (Ray, Ray) {
    let (c, s) = (FRAC_PI_8.cos(), FRAC_PI_8.sin());
    let p = oracle.basis.mul_vec(&[c.into(), s.into()]);
    let q = oracle.basis.mul_vec(&[s.into(), (-c).into()]);
    (
        Ray::from_vector(&p).expect("unit vector"),
        Ray::from_vector(&q).expect("unit vector"),
    )
}

/// Runs the two-level twist demonstration: the trace condition with
/// `D′ = D` on sampled rays, and broken orthogonality on the probe pair.
pub fn twist_demonstration(d: &State, kappa: f64, config: &PipelineConfig) -> Result<ClassificationReport> {
    config.validate()?;
    let oracle = remark_dim2_twist(d, kappa)?;
    let mut rng = RandomSource::new(config.seed);
    let samples = config.trials.max(TWIST_SAMPLES);
    let base = rng.next_u64();
    let probes = run_trials(base, samples, config.parallel, |_, rng| -> Result<_> {
        let r = Ray::new(random_unit_vector(2, rng))?;
        let img = oracle.map_ray(&r)?;
        let res = (trace_of_product(&img.projection(), d.matrix()).re - trace_of_product(&r.projection(), d.matrix()).re).abs();
        Ok((Probe::ProjectionTrace { p: r.projection() }, ProbeOutcome::above(res, config.trace_tol)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let trace = StageResult::from_checks(
        STAGE_TWIST_TRACE,
        vec![MapReport::from_outcomes("twist_trace", samples, base, config.trace_tol, probes)],
    );

    let (p, q) = twist_probe_pair(&oracle);
    let overlap = oracle.map_ray(&p)?.overlap(&oracle.map_ray(&q)?);
    let mut ortho = StageResult::from_checks(STAGE_TWIST_ORTHO, vec![]);
    ortho.verdict = Verdict::from_ok(overlap > TWIST_OVERLAP_MIN);
    ortho.residual = overlap;
    ortho.data.insert("image_overlap".into(), overlap);
    ortho.data.insert("kappa".into(), kappa);
    ortho.witnesses.push(Witness {
        probe: Probe::OrthogonalPair {
            x: p.as_column(),
            y: q.as_column(),
        },
        residual: overlap,
    });
    let demonstration_passed = trace.passed() && ortho.passed();
    Ok(ClassificationReport {
        tool_version: TOOL_VERSION.to_owned(),
        pipeline: "dim2_twist".to_owned(),
        seed: config.seed,
        dim: 2,
        config: serde_json::to_value(config).expect("config serializes"),
        stages: vec![trace, ortho],
        final_verdict: FinalVerdict::HypothesisDegenerate { demonstration_passed },
    })
}

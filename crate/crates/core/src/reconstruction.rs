//! Reconstruction of the unitary or antiunitary operator implementing a map
//! on rank-one projections, and the staged classification pipeline for
//! order-preserving maps that respect a pair of states.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::effects::{trace_pair, Effect, Ray, State, SHARP_TOL};
use crate::error::{Error, Result};
use crate::linalg::random::{random_effect_matrix, random_projection_matrix, random_unit_vector};
use crate::linalg::{basis_vector, conj_vec, eig_hermitian, inner, loewner_margin, ComplexMatrix, RandomSource};
use crate::maps::{
    check_order_preservation, check_ortho_compatibility, check_trace_condition, replay_witness, EffectMap,
    EffectMapSpec, ORDER_TOL, ORTHO_TOL, TRACE_TOL,
};
use crate::report::{
    ClassificationReport, FinalVerdict, MapReport, Probe, ProbeOutcome, StageResult, Verdict, Witness, TOOL_VERSION,
};
use crate::trials::{evaluation_failed, run_trials, CheckOptions};

/// Probe images with `|<f_i, f_j>|` above this are not orthogonal.
pub const RECONSTRUCTION_ORTHO_TOL: f64 = 1e-8;
pub const PHASE_TOL: f64 = 1e-6;
pub const VERIFY_TOL: f64 = 1e-6;
pub const VERIFY_SAMPLES: usize = 50;
/// Rays whose probability against `D` is below this are resampled.
pub const MIN_RAY_WEIGHT: f64 = 1e-6;
/// Effects probing orthogonality are `λP + μ(I − P)` with these values.
pub const PROBE_LAMBDA: f64 = 0.3;
pub const PROBE_MU: f64 = 0.9;
pub const SCALAR_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub const STAGE_ORDER: &str = "a_order";
pub const STAGE_TRACE: &str = "b_trace";
pub const STAGE_RANK: &str = "c_projection_rank";
pub const STAGE_SCALAR: &str = "d_scalar_homogeneity";
pub const STAGE_ORTHOGONALITY: &str = "e_orthogonality";
pub const STAGE_DIM2: &str = "e2_dim2_branch";
pub const STAGE_RECONSTRUCTION: &str = "f_reconstruction";
pub const STAGE_GLOBAL: &str = "g_global";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Linear,
    Antilinear,
}

/// `x ↦ U x` (linear) or `x ↦ U conj(x)` (antilinear) for a unitary `U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImplementingOperator {
    pub kind: Kind,
    pub unitary: ComplexMatrix,
}

impl ImplementingOperator {
    pub fn new(kind: Kind, unitary: ComplexMatrix) -> Self {
        Self { kind, unitary }
    }

    pub fn dim(&self) -> usize {
        self.unitary.rows()
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self.kind {
            Kind::Linear => self.unitary.mul_vec(x),
            Kind::Antilinear => self.unitary.mul_vec(&conj_vec(x)),
        }
    }

    /// `U M U*` or `U conj(M) U*`.
    pub fn conjugate(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        match self.kind {
            Kind::Linear => m.congruence(&self.unitary),
            Kind::Antilinear => m.conj().congruence(&self.unitary),
        }
    }

    pub fn as_spec(&self) -> EffectMapSpec {
        match self.kind {
            Kind::Linear => EffectMapSpec::Unitary(self.unitary.clone()),
            Kind::Antilinear => EffectMapSpec::Antiunitary(self.unitary.clone()),
        }
    }

    pub fn projective_distance(&self, other: &Self) -> Result<f64> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch(self.kind, other.kind));
        }
        projective_distance(&self.unitary, &other.unitary)
    }
}

/// `1 − |tr(V* U)| / n`; zero exactly when `V = cU` with `|c| = 1`.
///
/// Antiunitaries are represented by their unitary part in the standard
/// basis, so the same formula compares them.
pub fn projective_distance(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    let n = u.dim()?;
    v.ensure_dim(n)?;
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            tr += v[(k, i)].conj() * u[(k, i)];
        }
    }
    Ok((1.0 - tr.norm() / n as f64).max(0.0))
}

/// A map on rank-one projections, given by the range of each image.
pub trait RayMap: Sync {
    fn dim(&self) -> usize;
    fn map_ray(&self, r: &Ray) -> Result<Ray>;
}

impl RayMap for ImplementingOperator {
    fn dim(&self) -> usize {
        ImplementingOperator::dim(self)
    }

    fn map_ray(&self, r: &Ray) -> Result<Ray> {
        Ray::from_vector(&self.apply_vec(r.vector()))
    }
}

/// Restriction of an effect map to rank-one projections.
pub struct InducedRayMap<'a> {
    map: &'a dyn EffectMap,
}

impl<'a> InducedRayMap<'a> {
    pub fn new(map: &'a dyn EffectMap) -> Self {
        Self { map }
    }
}

impl RayMap for InducedRayMap<'_> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn map_ray(&self, r: &Ray) -> Result<Ray> {
        let img = self.map.apply(&Effect::new(r.projection())?)?;
        Ray::dominant(img.matrix())
    }
}

/// Wraps a closure as a [`RayMap`].
pub struct FnRayMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnRayMap<F>
where
    F: Fn(&Ray) -> Result<Ray> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> RayMap for FnRayMap<F>
where
    F: Fn(&Ray) -> Result<Ray> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn map_ray(&self, r: &Ray) -> Result<Ray> {
        (self.f)(r)
    }
}

/// Worst deviation `1 − |<oracle(r), oracle(e^{iθ} r)>|` over sampled rays.
pub fn phase_consistency(oracle: &dyn RayMap, samples: usize, rng: &mut RandomSource) -> Result<f64> {
    let n = oracle.dim();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let r = Ray::new(random_unit_vector(n, rng))?;
        let phase = Complex64::from_polar(1.0, rng.uniform_range(0.0, std::f64::consts::TAU));
        let shifted = Ray::from_vector(&r.vector().iter().map(|z| z * phase).collect::<Vec<_>>())?;
        let a = oracle.map_ray(&r)?;
        let b = oracle.map_ray(&shifted)?;
        worst = worst.max(1.0 - a.overlap(&b));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub kind: Kind,
    pub unitary: ComplexMatrix,
    /// Worst `1 − |<oracle(r), U r>|` over the verification rays.
    pub max_residual: f64,
}

impl ReconstructionResult {
    pub fn operator(&self) -> ImplementingOperator {
        ImplementingOperator::new(self.kind, self.unitary.clone())
    }
}

fn superposition(n: usize, j: usize, coeff: Complex64) -> Result<Ray> {
    let mut v = basis_vector(n, 0);
    v[j] = coeff;
    Ray::new(v.into_iter().map(|z| z * FRAC_1_SQRT_2).collect())
}

/// Builds `U` from an orthogonality-preserving map on rays.
///
/// Images of the standard basis fix the columns of `U` up to phase; the
/// images of `(e₁ + e_j)/√2` fix the relative phases; the image of
/// `(e₁ + i e₂)/√2` decides between linear and antilinear. The result is
/// then checked on `VERIFY_SAMPLES` random rays.
pub fn reconstruct_wigner(oracle: &dyn RayMap, rng: &mut RandomSource) -> Result<ReconstructionResult> {
    let n = oracle.dim();
    if n == 0 {
        return Err(Error::BadDimension(0));
    }
    let frame: Vec<Vec<Complex64>> = (0..n)
        .map(|i| oracle.map_ray(&Ray::basis(n, i)).map(|r| r.vector().to_vec()))
        .collect::<Result<_>>()?;
    for i in 0..n {
        if frame[i].len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: frame[i].len(),
            });
        }
        for j in (i + 1)..n {
            let overlap = inner(&frame[i], &frame[j]).norm();
            if overlap > RECONSTRUCTION_ORTHO_TOL {
                return Err(Error::OrthogonalityViolated { i, j, overlap });
            }
        }
    }

    let mut u = ComplexMatrix::zeros(n, n);
    u.set_column(0, &frame[0]);
    for j in 1..n {
        let g = oracle.map_ray(&superposition(n, j, Complex64::new(1.0, 0.0))?)?;
        let c0 = inner(g.vector(), &frame[0]);
        let cj = inner(g.vector(), &frame[j]);
        for (label, c) in [("first", c0), ("j-th", cj)] {
            if (c.norm() - FRAC_1_SQRT_2).abs() > PHASE_TOL {
                return Err(Error::PhaseInconsistent(format!(
                    "column {j}: {label} coefficient has modulus {:.3e}, expected 1/sqrt(2)",
                    c.norm()
                )));
            }
        }
        let align = c0.conj() / c0.norm();
        let alpha = cj * align / cj.norm();
        let col: Vec<Complex64> = frame[j].iter().map(|z| z * alpha).collect();
        u.set_column(j, &col);
    }

    let kind = if n == 1 {
        Kind::Linear
    } else {
        let g = oracle.map_ray(&superposition(n, 1, Complex64::i())?)?;
        let d0 = inner(g.vector(), &u.column(0));
        let d1 = inner(g.vector(), &u.column(1));
        if d0.norm() < PHASE_TOL {
            return Err(Error::PhaseInconsistent("complex probe has no e1 component".into()));
        }
        let ratio = d1 / d0;
        let ratio = ratio / ratio.norm();
        if (ratio - Complex64::i()).norm() <= PHASE_TOL {
            Kind::Linear
        } else if (ratio + Complex64::i()).norm() <= PHASE_TOL {
            Kind::Antilinear
        } else {
            return Err(Error::PhaseInconsistent(format!(
                "complex probe ratio {ratio} is neither +i nor -i"
            )));
        }
    };

    let op = ImplementingOperator::new(kind, u);
    let mut max_residual = 0.0f64;
    for _ in 0..VERIFY_SAMPLES {
        let r = Ray::new(random_unit_vector(n, rng))?;
        let img = oracle.map_ray(&r)?;
        let want = op.apply_vec(r.vector());
        max_residual = max_residual.max(1.0 - inner(img.vector(), &want).norm());
    }
    if max_residual > VERIFY_TOL {
        return Err(Error::VerificationFailed(max_residual));
    }
    Ok(ReconstructionResult {
        kind,
        unitary: op.unitary,
        max_residual,
    })
}

/// Trial counts and tolerances of the classification pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub trials: usize,
    pub order_tol: f64,
    pub trace_tol: f64,
    pub ortho_tol: f64,
    /// Equality tolerance for stages (c)–(g).
    pub stage_tol: f64,
    /// Relative eigenvalue spread below which `A*A` counts as scalar.
    pub scalar_tol: f64,
    /// Trials of the final agreement stage; never fewer than 100.
    pub global_trials: usize,
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: crate::DEFAULT_SEED,
            trials: 100,
            order_tol: ORDER_TOL,
            trace_tol: TRACE_TOL,
            ortho_tol: ORTHO_TOL,
            stage_tol: 1e-7,
            scalar_tol: crate::sharp::SCALAR_SPREAD_TOL,
            global_trials: 100,
            parallel: false,
        }
    }
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Sets every tolerance to `tol`.
    pub fn with_uniform_tol(mut self, tol: f64) -> Self {
        self.order_tol = tol;
        self.trace_tol = tol;
        self.ortho_tol = tol;
        self.stage_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        for (name, v) in [
            ("order_tol", self.order_tol),
            ("trace_tol", self.trace_tol),
            ("ortho_tol", self.ortho_tol),
            ("stage_tol", self.stage_tol),
            ("scalar_tol", self.scalar_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub(crate) fn options(&self, tol: f64) -> CheckOptions {
        CheckOptions::new(self.trials).with_tol(tol).parallel(self.parallel)
    }
}

/// Samples a ray `r` with `tr(P_r D) ≥ MIN_RAY_WEIGHT`.
fn weighted_ray(d: &State, rng: &mut RandomSource) -> Result<Ray> {
    let n = d.dim();
    loop {
        let r = Ray::new(random_unit_vector(n, rng))?;
        if trace_pair(&Effect::from_trusted(r.projection()), d)? >= MIN_RAY_WEIGHT {
            return Ok(r);
        }
    }
}

/// Random ray orthogonal to `r`.
fn orthogonal_ray(r: &Ray, rng: &mut RandomSource) -> Result<Ray> {
    loop {
        let mut v = random_unit_vector(r.dim(), rng);
        let c = inner(&v, r.vector());
        for (vi, ri) in v.iter_mut().zip(r.vector()) {
            *vi -= c * ri;
        }
        if crate::linalg::norm(&v) > 1e-6 {
            return Ray::from_vector(&v);
        }
    }
}

fn sharpness_defect(m: &ComplexMatrix) -> Result<(f64, usize)> {
    let e = eig_hermitian(m)?;
    let defect = e
        .values
        .iter()
        .map(|&l| l.abs().min((l - 1.0).abs()))
        .fold(0.0, f64::max);
    let rank = e.values.iter().filter(|&&l| l > 0.5).count();
    Ok((defect, rank))
}

fn rank_outcome(map: &dyn EffectMap, p: &ComplexMatrix, rank: usize) -> ProbeOutcome {
    let eval = || -> Result<ProbeOutcome> {
        let img = map.apply(&Effect::new(p.clone())?)?;
        let (defect, r) = sharpness_defect(img.matrix())?;
        Ok(ProbeOutcome {
            residual: if r == rank { defect } else { defect.max(1.0) },
            violated: r != rank || defect > SHARP_TOL,
        })
    };
    eval().unwrap_or_else(|_| evaluation_failed())
}

fn scalar_outcome(map: &dyn EffectMap, lambda: f64, dim: usize, tol: f64) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let s = Effect::scalar(dim, lambda);
        Ok(map.apply(&s)?.matrix().distance(s.matrix()))
    };
    eval().map_or_else(|_| evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

fn homogeneity_outcome(map: &dyn EffectMap, lambda: f64, ray: &ComplexMatrix, tol: f64) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let p = Ray::new(ray.column(0))?.projection();
        let scaled = map.apply(&Effect::new(p.scale(lambda))?)?;
        let img = map.apply(&Effect::new(p)?)?;
        Ok(scaled.matrix().distance(&img.matrix().scale(lambda)))
    };
    eval().map_or_else(|_| evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

/// Two-eigenvalue probe `E = λP + μ(I − P)`: images of `P` and `Q ≤ I − P`
/// must be orthogonal, `φ(E)` must have strength `λ` along the image of
/// `P` and `μ` along the image of `Q`, and `λI ≤ φ(E) ≤ μI`.
fn orthogonality_outcome(
    map: &dyn EffectMap,
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    lambda: f64,
    mu: f64,
    ortho_tol: f64,
    tol: f64,
) -> ProbeOutcome {
    let eval = || -> Result<ProbeOutcome> {
        let rp = Ray::new(p.column(0))?;
        let rq = Ray::new(q.column(0))?;
        let n = rp.dim();
        let pp = rp.projection();
        let e = &pp.scale(lambda) + &(&ComplexMatrix::identity(n) - &pp).scale(mu);
        let img_e = map.apply(&Effect::new(e)?)?;
        let ip = Ray::dominant(map.apply(&Effect::new(pp)?)?.matrix())?;
        let iq = Ray::dominant(map.apply(&Effect::new(rq.projection())?)?.matrix())?;

        let overlap = ip.overlap(&iq);
        let s_p = (img_e.strength(&ip)? - lambda).abs();
        let s_q = (img_e.strength(&iq)? - mu).abs();
        let lower = loewner_margin(&ComplexMatrix::identity(n).scale(lambda), img_e.matrix())?;
        let upper = loewner_margin(img_e.matrix(), &ComplexMatrix::identity(n).scale(mu))?;
        let bounds = (-lower).max(-upper).max(0.0);
        let deviation = s_p.max(s_q).max(bounds);
        Ok(ProbeOutcome {
            residual: overlap.max(deviation),
            violated: overlap > ortho_tol || deviation > tol,
        })
    };
    eval().unwrap_or_else(|_| evaluation_failed())
}

fn dim2_linearity_outcome(
    map: &dyn EffectMap,
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    lambda: f64,
    mu: f64,
    tol: f64,
) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let pp = Ray::new(p.column(0))?.projection();
        let qq = Ray::new(q.column(0))?.projection();
        let lhs = map.apply(&Effect::new(&pp.scale(lambda) + &qq.scale(mu))?)?;
        let ip = map.apply(&Effect::new(pp)?)?;
        let iq = map.apply(&Effect::new(qq)?)?;
        let rhs = &ip.matrix().scale(lambda) + &iq.matrix().scale(mu);
        Ok(lhs.matrix().distance(&rhs))
    };
    eval().map_or_else(|_| evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

fn global_outcome(map: &dyn EffectMap, e: &ComplexMatrix, op: &ImplementingOperator, tol: f64) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let img = map.apply(&Effect::new(e.clone())?)?;
        Ok(img.matrix().distance(&op.conjugate(e)?))
    };
    eval().map_or_else(|_| evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

/// Re-evaluates any witness produced by [`classify_theorem1`].
pub fn replay_stage_witness(map: &dyn EffectMap, w: &Witness, config: &PipelineConfig) -> Result<ProbeOutcome> {
    match &w.probe {
        Probe::OrderForward { .. } | Probe::OrderBackward { .. } => replay_witness(map, w, config.order_tol),
        Probe::Ortho { .. } => replay_witness(map, w, config.ortho_tol),
        Probe::Trace { .. } => replay_witness(map, w, config.trace_tol),
        Probe::RankPreservation { p, rank } => Ok(rank_outcome(map, p, *rank)),
        Probe::ScalarFixing { lambda, dim } => Ok(scalar_outcome(map, *lambda, *dim, config.stage_tol)),
        Probe::Homogeneity { lambda, ray } => Ok(homogeneity_outcome(map, *lambda, ray, config.stage_tol)),
        Probe::Orthogonality { p, q, lambda, mu } => Ok(orthogonality_outcome(
            map,
            p,
            q,
            *lambda,
            *mu,
            config.ortho_tol,
            config.stage_tol,
        )),
        Probe::Dim2Linearity { p, q, lambda, mu } => {
            Ok(dim2_linearity_outcome(map, p, q, *lambda, *mu, config.stage_tol))
        }
        Probe::Global { e, unitary, kind } => Ok(global_outcome(
            map,
            e,
            &ImplementingOperator::new(*kind, unitary.clone()),
            config.stage_tol,
        )),
        Probe::Reconstruction { .. } => {
            let r = reconstruct_wigner(&InducedRayMap::new(map), &mut RandomSource::new(config.seed));
            Ok(match r {
                Ok(res) => ProbeOutcome::above(res.max_residual, VERIFY_TOL),
                Err(_) => evaluation_failed(),
            })
        }
        other => Err(Error::Config(format!("probe {other:?} does not belong to this pipeline"))),
    }
}

fn stage(name: &str, check: &str, trials: usize, seed: u64, tol: f64, probes: Vec<(Probe, ProbeOutcome)>) -> StageResult {
    StageResult::from_checks(name, vec![MapReport::from_outcomes(check, trials, seed, tol, probes)])
}

/// Runs the staged verification of an order-preserving map satisfying
/// `tr(φ(E) D′) = tr(E D)`, stopping at the first failing stage.
///
/// A certified verdict means no violation was found at the configured
/// trial counts, and carries the reconstructed implementing operator.
pub fn classify_theorem1(
    map: &dyn EffectMap,
    d: &State,
    d_prime: &State,
    dim: usize,
    config: &PipelineConfig,
) -> Result<ClassificationReport> {
    config.validate()?;
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim, 2));
    }
    if map.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: map.dim(),
        });
    }
    d.matrix().ensure_dim(dim)?;
    d_prime.matrix().ensure_dim(dim)?;

    let mut rng = RandomSource::new(config.seed);
    let mut stages: Vec<StageResult> = Vec::new();
    let trials = config.trials;
    let par = config.parallel;

    let report = |stages: Vec<StageResult>, final_verdict: FinalVerdict| ClassificationReport {
        tool_version: TOOL_VERSION.to_owned(),
        pipeline: "theorem1".to_owned(),
        seed: config.seed,
        dim,
        config: serde_json::to_value(config).expect("config serializes"),
        stages,
        final_verdict,
    };
    macro_rules! push_or_refute {
        ($stage:expr) => {{
            let s: StageResult = $stage;
            let ok = s.passed();
            let name = s.name.clone();
            stages.push(s);
            if !ok {
                return Ok(report(
                    stages,
                    FinalVerdict::Refuted {
                        stage: name,
                        anomaly: false,
                    },
                ));
            }
        }};
    }

    // (a) order hypothesis
    let order = check_order_preservation(map, dim, &config.options(config.order_tol), &mut rng)?;
    push_or_refute!(StageResult::from_checks(STAGE_ORDER, vec![order]));

    // (b) trace hypothesis
    let trace = check_trace_condition(map, d, d_prime, &config.options(config.trace_tol), &mut rng)?;
    push_or_refute!(StageResult::from_checks(STAGE_TRACE, vec![trace]));

    // (c) projections go to projections of the same rank
    let base = rng.next_u64();
    let probes = run_trials(base, trials, par, |i, rng| -> Result<_> {
        let rank = 1 + i % (dim - 1);
        let p = random_projection_matrix(dim, rank, rng)?;
        let o = rank_outcome(map, &p, rank);
        Ok((Probe::RankPreservation { p, rank }, o))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    push_or_refute!(stage(STAGE_RANK, "projection_rank", trials, base, SHARP_TOL, probes));

    // (d) φ(λI) = λI and φ(λP) = λφ(P)
    let tol = config.stage_tol;
    let base = rng.next_u64();
    let mut probes: Vec<(Probe, ProbeOutcome)> = SCALAR_GRID
        .iter()
        .map(|&lambda| (Probe::ScalarFixing { lambda, dim }, scalar_outcome(map, lambda, dim, tol)))
        .collect();
    let sampled = run_trials(base, trials, par, |i, rng| -> Result<_> {
        let ray = weighted_ray(d, rng)?.as_column();
        let lambda = SCALAR_GRID[i % SCALAR_GRID.len()];
        let o = homogeneity_outcome(map, lambda, &ray, tol);
        Ok((Probe::Homogeneity { lambda, ray }, o))
    });
    for s in sampled {
        probes.push(s?);
    }
    push_or_refute!(stage(STAGE_SCALAR, "scalar_homogeneity", trials, base, tol, probes));

    // (e) orthogonality of rank-one images via two-eigenvalue effects
    let base = rng.next_u64();
    let probes = run_trials(base, trials, par, |_, rng| -> Result<_> {
        let rp = weighted_ray(d, rng)?;
        let rq = orthogonal_ray(&rp, rng)?;
        let (p, q) = (rp.as_column(), rq.as_column());
        let o = orthogonality_outcome(map, &p, &q, PROBE_LAMBDA, PROBE_MU, config.ortho_tol, tol);
        Ok((
            Probe::Orthogonality {
                p,
                q,
                lambda: PROBE_LAMBDA,
                mu: PROBE_MU,
            },
            o,
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    push_or_refute!(stage(STAGE_ORTHOGONALITY, "orthogonality", trials, base, tol, probes));

    // dimension two: additivity on orthogonal pairs and ⊥-compatibility
    if dim == 2 {
        let base = rng.next_u64();
        let probes = run_trials(base, trials, par, |_, rng| -> Result<_> {
            let rp = Ray::new(random_unit_vector(dim, rng))?;
            let rq = orthogonal_ray(&rp, rng)?;
            let (lambda, mu) = (rng.uniform(), rng.uniform());
            let (p, q) = (rp.as_column(), rq.as_column());
            let o = dim2_linearity_outcome(map, &p, &q, lambda, mu, tol);
            Ok((Probe::Dim2Linearity { p, q, lambda, mu }, o))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let linear = MapReport::from_outcomes("dim2_additivity", trials, base, tol, probes);
        let ortho = check_ortho_compatibility(map, dim, &config.options(config.ortho_tol), &mut rng)?;
        push_or_refute!(StageResult::from_checks(STAGE_DIM2, vec![linear, ortho]));
    }

    // (f) reconstruction from the rank-one restriction
    let recon = reconstruct_wigner(&InducedRayMap::new(map), &mut rng);
    let op = match recon {
        Ok(r) => {
            let mut s = StageResult::from_checks(STAGE_RECONSTRUCTION, vec![]);
            s.residual = r.max_residual;
            s.data.insert("max_residual".into(), r.max_residual);
            stages.push(s);
            r.operator()
        }
        Err(e) => {
            let reason = e.to_string();
            let mut s = StageResult::from_checks(STAGE_RECONSTRUCTION, vec![]);
            s.verdict = Verdict::Fail;
            s.residual = crate::trials::FAILED_EVALUATION;
            s.witnesses.push(Witness {
                probe: Probe::Reconstruction { reason },
                residual: s.residual,
            });
            push_or_refute!(s);
            unreachable!("failed stage returns");
        }
    };

    // (g) φ(E) = U E U* on random effects
    let global_trials = config.global_trials.max(100);
    let base = rng.next_u64();
    let probes = run_trials(base, global_trials, par, |_, rng| -> Result<_> {
        let e = random_effect_matrix(dim, rng)?;
        let o = global_outcome(map, &e, &op, tol);
        Ok((
            Probe::Global {
                e,
                unitary: op.unitary.clone(),
                kind: op.kind,
            },
            o,
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    push_or_refute!(stage(STAGE_GLOBAL, "global_congruence", global_trials, base, tol, probes));

    Ok(report(
        stages,
        FinalVerdict::CertifiedAutomorphism {
            kind: op.kind,
            unitary: op.unitary,
            mu: None,
        },
    ))
}

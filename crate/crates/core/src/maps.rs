//! Bijective maps on the effect algebra and the property checkers for
//! order preservation, orthocomplement compatibility and the trace
//! condition.
//!
//! Besides unitary and antiunitary congruences this covers the
//! order-preserving family
//!
//! ```text
//! Φ_T(E) = S^{-1/2} ((I − T² + T(I+E)^{-1}T)^{-1} − I) S^{-1/2},   S = T²(2I − T²)^{-1}
//! ```
//!
//! for a fixed invertible effect `T`, which preserves the order in both
//! directions but does not commute with `E ↦ I − E` unless `T = I`.

use serde::{Deserialize, Serialize};

use crate::effects::{trace_of_product, Effect, State};
use crate::error::{Error, Result};
use crate::linalg::random::{ordered_effect_pair, random_effect_matrix, random_projection_matrix};
use crate::linalg::{
    eig_hermitian, eig_hermitian_lenient, hermitian_inverse, loewner_margin, ComplexMatrix, EigenDecomposition,
    RandomSource,
};
use crate::report::{MapReport, Probe, ProbeOutcome, Witness};
use crate::trials::{evaluation_failed, flatten, run_trials, CheckOptions};

/// Smallest admissible eigenvalue of `T` in `Φ_T`.
pub const MK_FLOOR: f64 = 1e-3;
pub const UNITARY_TOL: f64 = 1e-9;
/// Intermediate inversions with a larger condition number are refused.
pub const MAX_CONDITION: f64 = 1e12;
pub const ORDER_TOL: f64 = 1e-8;
pub const ORTHO_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-10;
/// Both Löwner margins of an incomparable probe pair must be below `−INCOMPARABLE_MARGIN`.
pub const INCOMPARABLE_MARGIN: f64 = 1e-3;
pub const INCOMPARABLE_ATTEMPTS: usize = 1000;

/// Anything that maps effects to effects on a fixed `ℂⁿ`.
pub trait EffectMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, e: &Effect) -> Result<Effect>;
}

/// Symbolic description of a bijective effect map.
#[derive(Clone, Debug, PartialEq)]
pub enum EffectMapSpec {
    /// `E ↦ U E U*`.
    Unitary(ComplexMatrix),
    /// `E ↦ U conj(E) U*`, conjugation entrywise in the standard basis.
    Antiunitary(ComplexMatrix),
    /// `Φ_T`.
    Mk(Effect),
    /// `Φ_T^{-1}`.
    MkInverse(Effect),
    /// Members applied left to right.
    Compose(Vec<EffectMapSpec>),
}

impl EffectMapSpec {
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        check_unitary(&u)?;
        Ok(Self::Unitary(u))
    }

    pub fn antiunitary(u: ComplexMatrix) -> Result<Self> {
        check_unitary(&u)?;
        Ok(Self::Antiunitary(u))
    }

    pub fn mk(t: Effect) -> Result<Self> {
        check_mk_parameter(&t)?;
        Ok(Self::Mk(t))
    }

    pub fn mk_inverse(t: Effect) -> Result<Self> {
        check_mk_parameter(&t)?;
        Ok(Self::MkInverse(t))
    }

    pub fn compose(members: Vec<EffectMapSpec>) -> Result<Self> {
        let spec = Self::Compose(members);
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every invariant of the variant (recursively for compositions).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Unitary(u) | Self::Antiunitary(u) => check_unitary(u),
            Self::Mk(t) | Self::MkInverse(t) => check_mk_parameter(t),
            Self::Compose(members) => {
                let first = members
                    .first()
                    .ok_or_else(|| Error::InvalidMap("field `members`: composition is empty".into()))?;
                let n = first.dim();
                for m in members {
                    m.validate()?;
                    if m.dim() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: m.dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Unitary(u) | Self::Antiunitary(u) => u.rows(),
            Self::Mk(t) | Self::MkInverse(t) => t.dim(),
            Self::Compose(members) => members.first().map_or(0, EffectMapSpec::dim),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpecDoc::from(self)).expect("spec serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(s)?;
        let spec = doc.into_spec()?;
        spec.validate()?;
        Ok(spec)
    }
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    u.dim()?;
    let r = u.unitarity_residual();
    if r > UNITARY_TOL {
        return Err(Error::NotUnitary(r));
    }
    Ok(())
}

fn check_mk_parameter(t: &Effect) -> Result<()> {
    let min = t.spectrum().min();
    if min <= MK_FLOOR {
        return Err(Error::InvalidMap(format!(
            "field `matrix`: smallest eigenvalue of T is {min:e}, must exceed {MK_FLOOR:e}"
        )));
    }
    Ok(())
}

impl EffectMap for EffectMapSpec {
    fn dim(&self) -> usize {
        EffectMapSpec::dim(self)
    }

    fn apply(&self, e: &Effect) -> Result<Effect> {
        apply_map(self, e)
    }
}

/// Evaluates the map on one effect.
pub fn apply_map(spec: &EffectMapSpec, e: &Effect) -> Result<Effect> {
    let n = spec.dim();
    if e.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: e.dim(),
        });
    }
    match spec {
        EffectMapSpec::Unitary(u) => Effect::new(e.matrix().congruence(u)?),
        EffectMapSpec::Antiunitary(u) => Effect::new(e.matrix().conj().congruence(u)?),
        EffectMapSpec::Mk(t) => Effect::new(mk_forward(t, e.matrix())?),
        EffectMapSpec::MkInverse(t) => Effect::new(mk_backward(t, e.matrix())?),
        EffectMapSpec::Compose(members) => members.iter().try_fold(e.clone(), |acc, m| apply_map(m, &acc)),
    }
}

/// Entrywise `d_i M_ij d_j`.
fn scale_both(m: &ComplexMatrix, d: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * (d[i] * d[j]))
}

fn checked_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (inv, cond) = hermitian_inverse(m).map_err(|e| match e {
        Error::Singular(_) => Error::NumericalBreakdown(f64::INFINITY),
        other => other,
    })?;
    if cond > MAX_CONDITION {
        return Err(Error::NumericalBreakdown(cond));
    }
    Ok(inv)
}

fn t_eigenbasis(t: &Effect) -> EigenDecomposition {
    eig_hermitian(t.matrix()).expect("effects are Hermitian")
}

/// Forward map, evaluated in the eigenbasis of `T`.
///
/// With `G = E(I+E)^{-1}` the inner operator is `X = I − TGT`, and
/// `X^{-1} − I` is formed as `X^{-1}·TGT` so nothing of order `t²` is
/// obtained by subtracting numbers of order one. `S^{-1/2}` is diagonal in
/// this basis with entries `√(2 − t²) / t`.
fn mk_forward(t: &Effect, e: &ComplexMatrix) -> Result<ComplexMatrix> {
    let te = t_eigenbasis(t);
    let v = &te.vectors;
    let tv = &te.values;
    let n = tv.len();

    let e_local = e.congruence(&v.adjoint())?;
    let g = eig_hermitian_lenient(&e_local).apply(|x| {
        let x = x.max(0.0);
        x / (1.0 + x)
    });
    let tgt = scale_both(&g, tv);
    let x = &ComplexMatrix::identity(n) - &tgt;
    let x_inv = checked_inverse(&x)?;
    let inner = (&x_inv * &tgt).hermitian_part();
    let s_inv_sqrt: Vec<f64> = tv.iter().map(|&ti| (2.0 - ti * ti).sqrt() / ti).collect();
    let local = scale_both(&inner, &s_inv_sqrt);
    Ok(local.congruence(v)?.hermitian_part())
}

/// Inverse map `Y ↦ E = (T^{-1}((S^{1/2} Y S^{1/2} + I)^{-1} − I + T²) T^{-1})^{-1} − I`.
///
/// In the eigenbasis of `T`, with `M = S^{1/2} Y S^{1/2}` and
/// `N = (I+M)^{-1} M`, the bracket equals `I − L` where `L = T^{-1} N T^{-1}`,
/// and `E = (I − L)^{-1} L`.
fn mk_backward(t: &Effect, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    let te = t_eigenbasis(t);
    let v = &te.vectors;
    let tv = &te.values;
    let n = tv.len();

    let y_local = y.congruence(&v.adjoint())?;
    let s_sqrt: Vec<f64> = tv.iter().map(|&ti| ti / (2.0 - ti * ti).sqrt()).collect();
    let m = scale_both(&y_local, &s_sqrt);
    let nmat = eig_hermitian_lenient(&m).apply(|x| {
        let x = x.max(0.0);
        x / (1.0 + x)
    });
    let t_inv: Vec<f64> = tv.iter().map(|&ti| 1.0 / ti).collect();
    let l = scale_both(&nmat, &t_inv);
    let k = &ComplexMatrix::identity(n) - &l;
    let k_inv = checked_inverse(&k)?;
    let local = (&k_inv * &l).hermitian_part();
    Ok(local.congruence(v)?.hermitian_part())
}

/// Normalized Löwner margin of `A ≤ B`: smallest eigenvalue of `B − A`
/// divided by `max(1, ‖B − A‖_F)`.
fn normalized_margin(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let scale = (b - a).frobenius_norm().max(1.0);
    Ok(loewner_margin(a, b)? / scale)
}

/// `E ≤ F` must give `φ(E) ≤ φ(F)`; residual is the normalized negative margin.
pub fn order_forward_outcome(map: &dyn EffectMap, e: &ComplexMatrix, f: &ComplexMatrix, tol: f64) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let ie = map.apply(&Effect::new(e.clone())?)?;
        let jf = map.apply(&Effect::new(f.clone())?)?;
        Ok((-normalized_margin(ie.matrix(), jf.matrix())?).max(0.0))
    };
    eval().map_or_else(|_| evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

/// Incomparable `E`, `F` must have incomparable images; residual is the
/// larger normalized image margin clipped at zero.
pub fn order_backward_outcome(map: &dyn EffectMap, e: &ComplexMatrix, f: &ComplexMatrix, tol: f64) -> ProbeOutcome {
    let eval = || -> Result<ProbeOutcome> {
        let ie = map.apply(&Effect::new(e.clone())?)?;
        let jf = map.apply(&Effect::new(f.clone())?)?;
        let m1 = normalized_margin(ie.matrix(), jf.matrix())?;
        let m2 = normalized_margin(jf.matrix(), ie.matrix())?;
        let worst = m1.max(m2);
        Ok(ProbeOutcome {
            residual: worst.max(0.0),
            violated: worst >= -tol,
        })
    };
    eval().unwrap_or_else(|_| evaluation_failed())
}

/// `‖φ(I − E) − (I − φ(E))‖_F`.
pub fn ortho_outcome(map: &dyn EffectMap, e: &ComplexMatrix, tol: f64) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let eff = Effect::new(e.clone())?;
        let a = map.apply(&eff.orthocomplement())?;
        let b = map.apply(&eff)?.orthocomplement();
        Ok(a.matrix().distance(b.matrix()))
    };
    eval().map_or_else(|_| evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

/// `|tr(φ(E) D′) − tr(E D)|`.
pub fn trace_outcome(
    map: &dyn EffectMap,
    e: &ComplexMatrix,
    d: &ComplexMatrix,
    d_prime: &ComplexMatrix,
    tol: f64,
) -> ProbeOutcome {
    let eval = || -> Result<f64> {
        let img = map.apply(&Effect::new(e.clone())?)?;
        let lhs = trace_of_product(img.matrix(), d_prime).re;
        let rhs = trace_of_product(e, d).re;
        Ok((lhs - rhs).abs())
    };
    eval().map_or_else(|_| evaluation_failed(), |r| ProbeOutcome::above(r, tol))
}

/// Re-evaluates an order, orthocomplement or trace witness against `map`.
pub fn replay_witness(map: &dyn EffectMap, w: &Witness, tol: f64) -> Result<ProbeOutcome> {
    match &w.probe {
        Probe::OrderForward { e, f } => Ok(order_forward_outcome(map, e, f, tol)),
        Probe::OrderBackward { e, f } => Ok(order_backward_outcome(map, e, f, tol)),
        Probe::Ortho { e } => Ok(ortho_outcome(map, e, tol)),
        Probe::Trace { e, d, d_prime } => Ok(trace_outcome(map, e, d, d_prime, tol)),
        other => Err(Error::Config(format!("probe {other:?} is not an effect-map probe"))),
    }
}

/// Rejection-samples a pair of effects that are incomparable in both directions.
fn incomparable_pair(dim: usize, rng: &mut RandomSource) -> Result<Option<(ComplexMatrix, ComplexMatrix)>> {
    if dim < 2 {
        return Ok(None);
    }
    for _ in 0..INCOMPARABLE_ATTEMPTS {
        let e = random_effect_matrix(dim, rng)?;
        let f = random_effect_matrix(dim, rng)?;
        if normalized_margin(&e, &f)? < -INCOMPARABLE_MARGIN && normalized_margin(&f, &e)? < -INCOMPARABLE_MARGIN {
            return Ok(Some((e, f)));
        }
    }
    Ok(None)
}

fn ensure_map_dim(map: &dyn EffectMap, dim: usize) -> Result<()> {
    if map.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            found: dim,
        });
    }
    if dim == 0 {
        return Err(Error::BadDimension(0));
    }
    Ok(())
}

/// Samples Löwner-comparable pairs (forward direction) and incomparable
/// pairs (backward direction) and checks that the map respects both.
pub fn check_order_preservation(
    map: &dyn EffectMap,
    dim: usize,
    opts: &CheckOptions,
    rng: &mut RandomSource,
) -> Result<MapReport> {
    ensure_map_dim(map, dim)?;
    let tol = opts.tol_or(ORDER_TOL);
    let base = rng.next_u64();
    let results = run_trials(base, opts.trials, opts.parallel, |_, rng| -> Result<(Vec<_>, bool)> {
        let mut out = Vec::with_capacity(2);
        let (e, f) = ordered_effect_pair(dim, rng)?;
        let o = order_forward_outcome(map, &e, &f, tol);
        out.push((Probe::OrderForward { e, f }, o));
        let mut skipped = true;
        if let Some((e, f)) = incomparable_pair(dim, rng)? {
            let o = order_backward_outcome(map, &e, &f, tol);
            out.push((Probe::OrderBackward { e, f }, o));
            skipped = false;
        }
        Ok((out, skipped))
    });
    let mut probes = Vec::with_capacity(results.len());
    let mut skipped = 0usize;
    for r in results {
        let (p, s) = r?;
        probes.push(p);
        skipped += usize::from(s);
    }
    let mut report = MapReport::from_outcomes("order_preservation", opts.trials, base, tol, flatten(probes));
    if skipped > 0 {
        report.notes.push(format!(
            "backward direction skipped on {skipped} trial(s): no incomparable pair found"
        ));
    }
    report.metrics.insert("backward_skipped".into(), skipped as f64);
    Ok(report)
}

/// Checks `φ(I − E) = I − φ(E)` on the scalar effects `λI`
/// (`λ ∈ {1/4, 1/2, 3/4}`) and on sampled effects.
pub fn check_ortho_compatibility(
    map: &dyn EffectMap,
    dim: usize,
    opts: &CheckOptions,
    rng: &mut RandomSource,
) -> Result<MapReport> {
    ensure_map_dim(map, dim)?;
    let tol = opts.tol_or(ORTHO_TOL);
    let base = rng.next_u64();
    let mut probes: Vec<(Probe, ProbeOutcome)> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&l| {
            let e = Effect::scalar(dim, l).into_matrix();
            let o = ortho_outcome(map, &e, tol);
            (Probe::Ortho { e }, o)
        })
        .collect();
    let sampled = run_trials(base, opts.trials, opts.parallel, |_, rng| -> Result<_> {
        let e = random_effect_matrix(dim, rng)?;
        let o = ortho_outcome(map, &e, tol);
        Ok((Probe::Ortho { e }, o))
    });
    for s in sampled {
        probes.push(s?);
    }
    Ok(MapReport::from_outcomes("ortho_compatibility", opts.trials, base, tol, probes))
}

/// Checks `tr(φ(E) D′) = tr(E D)` on sampled effects; odd trials use
/// rank-one projections.
pub fn check_trace_condition(
    map: &dyn EffectMap,
    d: &State,
    d_prime: &State,
    opts: &CheckOptions,
    rng: &mut RandomSource,
) -> Result<MapReport> {
    let dim = map.dim();
    d.matrix().ensure_dim(dim)?;
    d_prime.matrix().ensure_dim(dim)?;
    let tol = opts.tol_or(TRACE_TOL);
    let base = rng.next_u64();
    let sampled = run_trials(base, opts.trials, opts.parallel, |i, rng| -> Result<_> {
        let e = if i % 2 == 0 {
            random_effect_matrix(dim, rng)?
        } else {
            random_projection_matrix(dim, 1, rng)?
        };
        let o = trace_outcome(map, &e, d.matrix(), d_prime.matrix(), tol);
        Ok((
            Probe::Trace {
                e,
                d: d.matrix().clone(),
                d_prime: d_prime.matrix().clone(),
            },
            o,
        ))
    });
    let probes = sampled.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(MapReport::from_outcomes("trace_condition", opts.trials, base, tol, probes))
}

/// The state `D′` making the trace condition hold for a congruence:
/// `U D U*` or `U conj(D) U*`. `None` for other variants.
pub fn suggest_matching_state(spec: &EffectMapSpec, d: &State) -> Option<State> {
    let m = match spec {
        EffectMapSpec::Unitary(u) => d.matrix().congruence(u).ok()?,
        EffectMapSpec::Antiunitary(u) => d.matrix().conj().congruence(u).ok()?,
        _ => return None,
    };
    State::new(m.hermitian_part()).ok()
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    variant: String,
    #[serde(default)]
    matrix: Option<ComplexMatrix>,
    #[serde(default)]
    members: Option<Vec<SpecDoc>>,
}

impl From<&EffectMapSpec> for SpecDoc {
    fn from(spec: &EffectMapSpec) -> Self {
        let (variant, matrix, members) = match spec {
            EffectMapSpec::Unitary(u) => ("unitary", Some(u.clone()), None),
            EffectMapSpec::Antiunitary(u) => ("antiunitary", Some(u.clone()), None),
            EffectMapSpec::Mk(t) => ("mk", Some(t.matrix().clone()), None),
            EffectMapSpec::MkInverse(t) => ("mk_inverse", Some(t.matrix().clone()), None),
            EffectMapSpec::Compose(ms) => ("compose", None, Some(ms.iter().map(SpecDoc::from).collect())),
        };
        Self {
            variant: variant.to_owned(),
            matrix,
            members,
        }
    }
}

impl SpecDoc {
    fn into_spec(self) -> Result<EffectMapSpec> {
        let need_matrix = |m: Option<ComplexMatrix>| {
            m.ok_or_else(|| Error::InvalidMap(format!("field `matrix`: required for variant `{}`", self.variant)))
        };
        match self.variant.as_str() {
            "unitary" => Ok(EffectMapSpec::Unitary(need_matrix(self.matrix.clone())?)),
            "antiunitary" => Ok(EffectMapSpec::Antiunitary(need_matrix(self.matrix.clone())?)),
            "mk" => Ok(EffectMapSpec::Mk(Effect::new(need_matrix(self.matrix.clone())?)?)),
            "mk_inverse" => Ok(EffectMapSpec::MkInverse(Effect::new(need_matrix(self.matrix.clone())?)?)),
            "compose" => {
                let members = self
                    .members
                    .ok_or_else(|| Error::InvalidMap("field `members`: required for variant `compose`".into()))?;
                Ok(EffectMapSpec::Compose(
                    members.into_iter().map(SpecDoc::into_spec).collect::<Result<_>>()?,
                ))
            }
            other => Err(Error::InvalidMap(format!("field `variant`: unknown value {other:?}"))),
        }
    }
}

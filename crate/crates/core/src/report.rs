//! Machine-readable outcomes of the verification pipelines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix;
use crate::reconstruction::Kind;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Witnesses kept per report, worst first.
pub const MAX_WITNESSES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// The concrete input a predicate was evaluated on. Every variant carries
/// enough data to be re-evaluated against the same map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum Probe {
    /// `E ≤ F` but the images are not ordered.
    OrderForward { e: ComplexMatrix, f: ComplexMatrix },
    /// `E`, `F` incomparable but the images are comparable.
    OrderBackward { e: ComplexMatrix, f: ComplexMatrix },
    Ortho { e: ComplexMatrix },
    Trace { e: ComplexMatrix, d: ComplexMatrix, d_prime: ComplexMatrix },
    RankPreservation { p: ComplexMatrix, rank: usize },
    ScalarFixing { lambda: f64, dim: usize },
    Homogeneity { lambda: f64, ray: ComplexMatrix },
    Orthogonality { p: ComplexMatrix, q: ComplexMatrix, lambda: f64, mu: f64 },
    Dim2Linearity { p: ComplexMatrix, q: ComplexMatrix, lambda: f64, mu: f64 },
    Global { e: ComplexMatrix, unitary: ComplexMatrix, kind: Kind },
    Reconstruction { reason: String },
    ProjectionTrace { p: ComplexMatrix },
    RatioIdentity { x: ComplexMatrix },
    PolarizedIdentity { x: ComplexMatrix },
    OrthogonalPair { x: ComplexMatrix, y: ComplexMatrix },
    NotScalar { x: ComplexMatrix, y: ComplexMatrix, spread: f64 },
    InducedMap { p: ComplexMatrix, unitary: ComplexMatrix, kind: Kind },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(flatten)]
    pub probe: Probe,
    pub residual: f64,
}

/// Result of evaluating one probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeOutcome {
    pub residual: f64,
    pub violated: bool,
}

impl ProbeOutcome {
    pub fn above(residual: f64, tol: f64) -> Self {
        Self {
            residual,
            violated: !(residual <= tol),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub check: String,
    pub verdict: Verdict,
    pub trials: usize,
    /// Base of the per-trial random streams.
    pub seed: u64,
    pub tol: f64,
    pub max_residual: f64,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MapReport {
    /// Aggregates probe outcomes in order; verdict fails iff any probe was
    /// violated, keeping the worst violations as witnesses.
    pub fn from_outcomes(
        check: &str,
        trials: usize,
        seed: u64,
        tol: f64,
        outcomes: impl IntoIterator<Item = (Probe, ProbeOutcome)>,
    ) -> Self {
        let mut max_residual = 0.0f64;
        let mut bad: Vec<Witness> = Vec::new();
        for (probe, out) in outcomes {
            if out.residual.is_finite() {
                max_residual = max_residual.max(out.residual);
            } else {
                max_residual = f64::INFINITY;
            }
            if out.violated {
                bad.push(Witness {
                    probe,
                    residual: out.residual,
                });
            }
        }
        bad.sort_by(|a, b| b.residual.total_cmp(&a.residual));
        bad.truncate(MAX_WITNESSES);
        Self {
            check: check.to_owned(),
            verdict: Verdict::from_ok(bad.is_empty()),
            trials,
            seed,
            tol,
            max_residual,
            witnesses: bad,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub name: String,
    pub verdict: Verdict,
    pub residual: f64,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<MapReport>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub data: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl StageResult {
    pub fn from_checks(name: &str, checks: Vec<MapReport>) -> Self {
        let verdict = Verdict::from_ok(checks.iter().all(MapReport::passed));
        let residual = checks.iter().map(|c| c.max_residual).fold(0.0, f64::max);
        let witnesses = checks
            .iter()
            .flat_map(|c| c.witnesses.iter().cloned())
            .take(MAX_WITNESSES)
            .collect();
        Self {
            name: name.to_owned(),
            verdict,
            residual,
            witnesses,
            checks,
            data: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FinalVerdict {
    CertifiedAutomorphism {
        kind: Kind,
        unitary: ComplexMatrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
    },
    Refuted {
        stage: String,
        #[serde(default)]
        anomaly: bool,
    },
    /// The hypotheses carry no information; a demonstration ran instead.
    HypothesisDegenerate { demonstration_passed: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub tool_version: String,
    pub pipeline: String,
    pub seed: u64,
    pub dim: usize,
    pub config: serde_json::Value,
    pub stages: Vec<StageResult>,
    #[serde(rename = "final")]
    pub final_verdict: FinalVerdict,
}

impl ClassificationReport {
    pub fn is_certified(&self) -> bool {
        matches!(self.final_verdict, FinalVerdict::CertifiedAutomorphism { .. })
    }

    /// Stage named in a refutation.
    pub fn refuted_stage(&self) -> Option<&str> {
        match &self.final_verdict {
            FinalVerdict::Refuted { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageResult> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

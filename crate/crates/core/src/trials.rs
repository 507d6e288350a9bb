use rayon::prelude::*;

use crate::linalg::RandomSource;
use crate::report::{Probe, ProbeOutcome};

/// Residual recorded when a probe could not be evaluated at all.
pub const FAILED_EVALUATION: f64 = f64::MAX;

/// Sampling options shared by the checkers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    pub trials: usize,
    /// Overrides the checker's default tolerance.
    pub tol: Option<f64>,
    /// Runs trials on the rayon pool; output is identical to sequential runs.
    pub parallel: bool,
}

impl CheckOptions {
    pub fn new(trials: usize) -> Self {
        Self {
            trials,
            tol: None,
            parallel: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub(crate) fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// Runs `trials` independent trials, trial `i` drawing from stream `i` of
/// `base`. Results come back in trial order.
pub(crate) fn run_trials<T, F>(base: u64, trials: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut RandomSource) -> T + Sync,
{
    let one = |i: usize| {
        let mut rng = RandomSource::substream(base, i as u64);
        f(i, &mut rng)
    };
    if parallel {
        (0..trials).into_par_iter().map(one).collect()
    } else {
        (0..trials).map(one).collect()
    }
}

pub(crate) fn flatten(results: Vec<Vec<(Probe, ProbeOutcome)>>) -> impl Iterator<Item = (Probe, ProbeOutcome)> {
    results.into_iter().flatten()
}

/// Outcome for a probe whose evaluation raised an error.
pub(crate) fn evaluation_failed() -> ProbeOutcome {
    ProbeOutcome {
        residual: FAILED_EVALUATION,
        violated: true,
    }
}

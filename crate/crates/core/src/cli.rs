//! Command-line front end.
//!
//! Exit codes: 0 pass or certified, 1 refuted or failed, 2 usage or input
//! error. Demonstrations exit 0 when the documented outcome occurs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::effects::{Effect, Ray, State};
use crate::error::{Error, Result};
use crate::generate::{generate, random_mk_parameter, GenKind};
use crate::linalg::random::{haar_unitary, random_state_matrix};
use crate::linalg::{ComplexMatrix, RandomSource};
use crate::maps::{
    check_order_preservation, check_ortho_compatibility, check_trace_condition, suggest_matching_state,
    EffectMapSpec, ORDER_TOL, ORTHO_TOL, TRACE_TOL,
};
use crate::reconstruction::{classify_theorem1, PipelineConfig};
use crate::report::{ClassificationReport, FinalVerdict, MapReport, TOOL_VERSION};
use crate::sharp::{random_scaled_unitary, random_semilinear, theorem2_harness, twist_demonstration, SemilinearOperator, SCALAR_STATE_TOL};
use crate::trials::CheckOptions;
use crate::DEFAULT_SEED;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Stream of the seed reserved for generating `auto` inputs; stream 0
/// drives the checks themselves.
const INPUT_STREAM: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "effectkit", version, about = "Effect-algebra map checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Seed of every random choice.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Sampled trials per check.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Overrides every tolerance of the command.
    #[arg(long)]
    tol: Option<f64>,
    /// Writes the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Runs trials on a thread pool; output is unchanged.
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit a random object as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: GenArg,
        #[arg(long)]
        dim: usize,
        /// Rank of a generated projection.
        #[arg(long)]
        rank: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Order, orthocomplement and trace checks on a map file.
    CheckMap {
        #[arg(long)]
        map: PathBuf,
        /// `auto` or `D.json,Dprime.json`.
        #[arg(long, default_value = "auto")]
        states: String,
        #[command(flatten)]
        common: Common,
    },
    /// Staged classification of an order-preserving map.
    Classify {
        /// `unitary:auto`, `antiunitary:auto`, `mk:auto` or a map file.
        #[arg(long)]
        map: String,
        #[arg(long)]
        dim: Option<usize>,
        /// `auto` or `D.json,Dprime.json`.
        #[arg(long, default_value = "auto")]
        states: String,
        #[command(flatten)]
        common: Common,
    },
    /// Staged verification of the subspace map induced by a semilinear operator.
    Theorem2 {
        /// `auto` (scaled unitary), `random:auto` (any invertible) or an operator file.
        #[arg(long, default_value = "auto")]
        operator: String,
        #[arg(long)]
        dim: Option<usize>,
        /// `auto` or `D.json,Dprime.json`.
        #[arg(long, default_value = "auto")]
        states: String,
        #[command(flatten)]
        common: Common,
    },
    /// Strength of an effect along a ray.
    Strength {
        #[arg(long)]
        effect: PathBuf,
        #[arg(long)]
        ray: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Documented counterexamples.
    Demo {
        #[arg(value_enum)]
        which: DemoArg,
        #[arg(long)]
        dim: Option<usize>,
        /// Twist parameter of `dim2-twist`.
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// State file for `dim2-twist`; defaults to diag(0.75, 0.25).
        #[arg(long)]
        state: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GenArg {
    Unitary,
    Antiunitary,
    Effect,
    State,
    Projection,
    Ray,
    Semilinear,
    Mk,
}

impl From<GenArg> for GenKind {
    fn from(g: GenArg) -> Self {
        match g {
            GenArg::Unitary => GenKind::Unitary,
            GenArg::Antiunitary => GenKind::Antiunitary,
            GenArg::Effect => GenKind::Effect,
            GenArg::State => GenKind::State,
            GenArg::Projection => GenKind::Projection,
            GenArg::Ray => GenKind::Ray,
            GenArg::Semilinear => GenKind::Semilinear,
            GenArg::Mk => GenKind::Mk,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DemoArg {
    MkCounterexample,
    ScalarState,
    Dim2Twist,
}

/// Report of `check-map` and `demo mk-counterexample`.
#[derive(Serialize)]
struct ChecksReport {
    tool_version: &'static str,
    command: String,
    seed: u64,
    trials: usize,
    dim: usize,
    tolerances: BTreeMap<String, f64>,
    inputs: BTreeMap<String, serde_json::Value>,
    checks: Vec<MapReport>,
    outcome: String,
}

impl Common {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("--trials must be positive".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Config(format!("--tol must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn pipeline(&self) -> PipelineConfig {
        let mut c = PipelineConfig {
            seed: self.seed,
            trials: self.trials,
            parallel: self.parallel,
            ..PipelineConfig::default()
        };
        if let Some(t) = self.tol {
            c = c.with_uniform_tol(t);
        }
        c
    }

    fn options(&self, default_tol: f64) -> CheckOptions {
        CheckOptions::new(self.trials)
            .with_tol(self.tol.unwrap_or(default_tol))
            .parallel(self.parallel)
    }

    fn input_rng(&self) -> RandomSource {
        RandomSource::substream(self.seed, INPUT_STREAM)
    }
}

/// Runs the CLI on `std::env::args_os()`.
pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

/// Runs the CLI on an argument list whose first item is the program name.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn json_pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serialization is infallible")
}

fn matrix_value(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::to_value(m).expect("matrix serializes")
}

fn check_dim(found: usize, requested: Option<usize>) -> Result<usize> {
    match requested {
        Some(d) if d != found => Err(Error::DimensionMismatch { expected: d, found }),
        _ => Ok(found),
    }
}

fn require_dim(dim: Option<usize>, what: &str) -> Result<usize> {
    match dim {
        Some(0) => Err(Error::BadDimension(0)),
        Some(d) => Ok(d),
        None => Err(Error::Config(format!("--dim is required for {what}"))),
    }
}

fn load_states(arg: &str, dim: usize) -> Result<Option<(State, State)>> {
    if arg == "auto" {
        return Ok(None);
    }
    let (a, b) = arg
        .split_once(',')
        .ok_or_else(|| Error::Config("--states expects 'auto' or 'D.json,Dprime.json'".into()))?;
    let d = State::from_json(&read(Path::new(a))?)?;
    let dp = State::from_json(&read(Path::new(b))?)?;
    d.matrix().ensure_dim(dim)?;
    dp.matrix().ensure_dim(dim)?;
    Ok(Some((d, dp)))
}

/// Random state with a non-degenerate spectrum.
fn random_nonscalar_state(dim: usize, rng: &mut RandomSource) -> Result<State> {
    loop {
        let d = State::new(random_state_matrix(dim, rng)?)?;
        if dim == 1 || !d.is_scalar(1e3 * SCALAR_STATE_TOL) {
            return Ok(d);
        }
    }
}

/// `D` random and `D′` matched to the map when it is a congruence.
fn auto_states(spec: &EffectMapSpec, rng: &mut RandomSource) -> Result<(State, State)> {
    let d = random_nonscalar_state(spec.dim(), rng)?;
    let dp = suggest_matching_state(spec, &d).unwrap_or_else(|| d.clone());
    Ok((d, dp))
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen {
            kind,
            dim,
            rank,
            common,
        } => {
            common.validate()?;
            let text = generate(kind.into(), dim, rank, &mut common.input_rng())?;
            emit(&text, &common.out)?;
            Ok(EXIT_PASS)
        }
        Command::CheckMap { map, states, common } => {
            common.validate()?;
            let spec = EffectMapSpec::from_json(&read(&map)?)?;
            let dim = spec.dim();
            let (d, dp) = match load_states(&states, dim)? {
                Some(s) => s,
                None => auto_states(&spec, &mut common.input_rng())?,
            };
            let mut rng = RandomSource::new(common.seed);
            let checks = vec![
                check_order_preservation(&spec, dim, &common.options(ORDER_TOL), &mut rng)?,
                check_ortho_compatibility(&spec, dim, &common.options(ORTHO_TOL), &mut rng)?,
                check_trace_condition(&spec, &d, &dp, &common.options(TRACE_TOL), &mut rng)?,
            ];
            let ok = checks.iter().all(MapReport::passed);
            let mut inputs = BTreeMap::new();
            inputs.insert("map".into(), serde_json::from_str(&spec.to_json())?);
            inputs.insert("d".into(), matrix_value(d.matrix()));
            inputs.insert("d_prime".into(), matrix_value(dp.matrix()));
            let report = checks_report("check-map", &common, dim, inputs, checks, if ok { "pass" } else { "fail" });
            emit(&json_pretty(&report), &common.out)?;
            Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Classify {
            map,
            dim,
            states,
            common,
        } => {
            common.validate()?;
            let mut input_rng = common.input_rng();
            let spec = match map.as_str() {
                "unitary:auto" => EffectMapSpec::unitary(haar_unitary(require_dim(dim, "auto maps")?, &mut input_rng)?)?,
                "antiunitary:auto" => {
                    EffectMapSpec::antiunitary(haar_unitary(require_dim(dim, "auto maps")?, &mut input_rng)?)?
                }
                "mk:auto" => EffectMapSpec::mk(random_mk_parameter(require_dim(dim, "auto maps")?, &mut input_rng)?)?,
                path if path.ends_with(":auto") => {
                    return Err(Error::Config(format!("unknown map generator '{path}'")));
                }
                path => EffectMapSpec::from_json(&read(Path::new(path))?)?,
            };
            let dim = check_dim(spec.dim(), dim)?;
            let (d, dp) = match load_states(&states, dim)? {
                Some(s) => s,
                None => auto_states(&spec, &mut input_rng)?,
            };
            let report = classify_theorem1(&spec, &d, &dp, dim, &common.pipeline())?;
            emit_classification(&report, &common)
        }
        Command::Theorem2 {
            operator,
            dim,
            states,
            common,
        } => {
            common.validate()?;
            let mut input_rng = common.input_rng();
            let a = match operator.as_str() {
                "auto" => {
                    let n = require_dim(dim, "auto operators")?;
                    let c = input_rng.uniform_range(0.5, 2.0);
                    let conj = input_rng.bernoulli(0.5);
                    random_scaled_unitary(n, c, conj, &mut input_rng)?
                }
                "random:auto" => random_semilinear(require_dim(dim, "auto operators")?, &mut input_rng)?,
                path => SemilinearOperator::from_json(&read(Path::new(path))?)?,
            };
            let dim = check_dim(a.dim(), dim)?;
            let (d, dp) = match load_states(&states, dim)? {
                Some(s) => s,
                None => {
                    let d = random_nonscalar_state(dim, &mut input_rng)?;
                    let dp = transported_state(&a, &d)?;
                    (d, dp)
                }
            };
            let report = theorem2_harness(&a, &d, &dp, &common.pipeline())?;
            emit_classification(&report, &common)
        }
        Command::Strength { effect, ray, common } => {
            common.validate()?;
            let e = Effect::from_json(&read(&effect)?)?;
            let r = Ray::from_json(&read(&ray)?)?;
            e.matrix().ensure_dim(r.dim())?;
            emit(&format!("{}", e.strength(&r)?), &common.out)?;
            Ok(EXIT_PASS)
        }
        Command::Demo {
            which,
            dim,
            kappa,
            state,
            common,
        } => {
            common.validate()?;
            match which {
                DemoArg::MkCounterexample => demo_mk(dim.unwrap_or(2), &common),
                DemoArg::ScalarState => demo_scalar_state(dim.unwrap_or(3), &common),
                DemoArg::Dim2Twist => {
                    if let Some(d) = dim {
                        check_dim(2, Some(d))?;
                    }
                    let d = match state {
                        Some(p) => State::from_json(&read(&p)?)?,
                        None => State::new(ComplexMatrix::diag_real(&[0.75, 0.25]))?,
                    };
                    let report = twist_demonstration(&d, kappa, &common.pipeline())?;
                    emit(&report.to_json_pretty(), &common.out)?;
                    Ok(demo_exit(&report))
                }
            }
        }
    }
}

/// `A D A*` normalized to unit trace (with `conj(D)` for conjugating `A`).
pub fn transported_state(a: &SemilinearOperator, d: &State) -> Result<State> {
    let dm = if a.conjugating() { d.matrix().conj() } else { d.matrix().clone() };
    let m = dm.congruence(a.matrix())?.hermitian_part();
    let tr = m.trace().re;
    State::new(m.scale(1.0 / tr))
}

fn checks_report(
    command: &str,
    common: &Common,
    dim: usize,
    inputs: BTreeMap<String, serde_json::Value>,
    checks: Vec<MapReport>,
    outcome: &str,
) -> ChecksReport {
    let tolerances = checks.iter().map(|c| (c.check.clone(), c.tol)).collect();
    ChecksReport {
        tool_version: TOOL_VERSION,
        command: command.to_owned(),
        seed: common.seed,
        trials: common.trials,
        dim,
        tolerances,
        inputs,
        checks,
        outcome: outcome.to_owned(),
    }
}

fn emit_classification(report: &ClassificationReport, common: &Common) -> Result<i32> {
    emit(&report.to_json_pretty(), &common.out)?;
    Ok(match &report.final_verdict {
        FinalVerdict::CertifiedAutomorphism { .. } => EXIT_PASS,
        FinalVerdict::Refuted { .. } => EXIT_FAIL,
        FinalVerdict::HypothesisDegenerate { demonstration_passed } => {
            if *demonstration_passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
    })
}

fn demo_exit(report: &ClassificationReport) -> i32 {
    match report.final_verdict {
        FinalVerdict::HypothesisDegenerate {
            demonstration_passed: true,
        } => EXIT_PASS,
        _ => EXIT_FAIL,
    }
}

/// The order-preserving map `Φ_T` passes the order check and fails
/// orthocomplement compatibility.
fn demo_mk(dim: usize, common: &Common) -> Result<i32> {
    if dim == 0 {
        return Err(Error::BadDimension(0));
    }
    let t = random_mk_parameter(dim, &mut common.input_rng())?;
    let spec = EffectMapSpec::mk(t.clone())?;
    let mut rng = RandomSource::new(common.seed);
    let order = check_order_preservation(&spec, dim, &common.options(ORDER_TOL), &mut rng)?;
    let ortho = check_ortho_compatibility(&spec, dim, &common.options(ORTHO_TOL), &mut rng)?;
    let documented = order.passed() && !ortho.passed();
    let mut inputs = BTreeMap::new();
    inputs.insert("t".into(), matrix_value(t.matrix()));
    let outcome = if documented {
        "order=pass ortho=fail"
    } else {
        "unexpected"
    };
    let report = checks_report("demo mk-counterexample", common, dim, inputs, vec![order, ortho], outcome);
    emit(&json_pretty(&report), &common.out)?;
    Ok(if documented { EXIT_PASS } else { EXIT_FAIL })
}

/// A random operator with `D = D′ = I/n`.
fn demo_scalar_state(dim: usize, common: &Common) -> Result<i32> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim, 2));
    }
    let a = random_semilinear(dim, &mut common.input_rng())?;
    let d = State::maximally_mixed(dim);
    let report = theorem2_harness(&a, &d, &d, &common.pipeline())?;
    emit(&report.to_json_pretty(), &common.out)?;
    Ok(demo_exit(&report))
}

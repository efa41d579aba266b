//! Running and validating experiments.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use vmfb_core::cocoercive::{admissible_scalar_step, kkt_residual, solve_cocoercive_pd, validate_pd, ProductPoint};
use vmfb_core::fb::{describe_validation, fb_solve, Clock, SolveOptions, SolveTrace, StoppingRule, Termination};
use vmfb_core::operators::Modulus;
use vmfb_core::oracles::{reference_fb, reference_pd};
use vmfb_core::schedules::{validate_theorem41, MetricSchedule, ValidationPolicy, ValidationReport};
use vmfb_core::strong::{beta_dual, solve_strong_duality, stack};
use vmfb_core::Vector;

use crate::build::{Builder, Experiment, Reference};
use crate::config::{ExperimentConfig, PolicySpec};
use crate::error::CliError;
use crate::fixtures;
use crate::output::{check_summaries, write_summary_file, write_trace_file, Summary};

/// Iteration budget of the oracle reference runs.
pub const REFERENCE_ITERATIONS: usize = 1_000_000;
/// Step tolerance of the oracle reference runs.
pub const REFERENCE_TOLERANCE: f64 = 1e-12;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_MAX_ITER: i32 = 4;

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub policy: Option<PolicySpec>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
}

/// A configuration together with the directory its relative file paths refer to.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base: PathBuf,
}

/// Loads a config from a path, falling back to the bundled fixtures by name.
pub fn load_config(arg: &str, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let path = Path::new(arg);
    let (mut config, base) = if path.exists() {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (ExperimentConfig::load(path)?, base)
    } else if let Some(text) = fixtures::get(arg) {
        let cfg = ExperimentConfig::parse(text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("bundled {arg}: {m}")),
            other => other,
        })?;
        (cfg, PathBuf::from("."))
    } else {
        return Err(CliError::Io(
            arg.to_string(),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or bundled fixture"),
        ));
    };
    if let Some(p) = overrides.policy {
        config.policy = p;
    }
    if let Some(s) = overrides.seed {
        config.seed = s;
    }
    if let Some(m) = overrides.max_iter {
        config.stop.max_iter = m;
    }
    Ok(LoadedConfig { config, base })
}

fn policy(p: PolicySpec) -> ValidationPolicy {
    match p {
        PolicySpec::Strict => ValidationPolicy::Strict,
        PolicySpec::Warn => ValidationPolicy::Warn,
    }
}

fn policy_name(p: PolicySpec) -> &'static str {
    match p {
        PolicySpec::Strict => "strict",
        PolicySpec::Warn => "warn",
    }
}

struct StdClock(Instant);

impl Clock for StdClock {
    fn now_ns(&self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}

/// Hypothesis report of an experiment, without running it.
pub fn hypotheses(exp: &Experiment, n_check: usize) -> Result<ValidationReport, CliError> {
    Ok(match exp {
        Experiment::Fb {
            problem, metric, steps, ..
        } => validate_theorem41(metric, steps, problem.b.beta(), n_check)?,
        Experiment::StrongPd {
            problem,
            dual_metrics,
            steps,
            ..
        } => {
            let block = MetricSchedule::block_diagonal(dual_metrics.clone())?;
            validate_theorem41(&block, steps, Modulus::Finite(beta_dual(problem)), n_check)?
        }
        Experiment::CocoercivePd {
            problem,
            metric,
            dual_metrics,
            relaxation,
            ..
        } => validate_pd(problem, metric, dual_metrics, relaxation, n_check)?.report,
    })
}

/// Reference point computed by an independent oracle solver: the primal solution for
/// `fb`, the stacked dual solution for `strong_pd`, and the stacked primal-dual
/// solution for `cocoercive_pd`.
pub fn oracle_reference(exp: &Experiment) -> Result<Vector, CliError> {
    Ok(match exp {
        Experiment::Fb { problem, x0, .. } => {
            let gamma = match problem.b.beta() {
                Modulus::Finite(b) => b,
                Modulus::Infinite => 1.0,
            };
            reference_fb(problem, gamma, x0, REFERENCE_ITERATIONS, REFERENCE_TOLERANCE)?.point
        }
        Experiment::StrongPd { problem, v0, .. } => {
            let dp = problem.dual_product_problem()?;
            reference_fb(
                &dp,
                beta_dual(problem),
                &stack(v0),
                REFERENCE_ITERATIONS,
                REFERENCE_TOLERANCE,
            )?
            .point
        }
        Experiment::CocoercivePd { problem, .. } => {
            let s = admissible_scalar_step(problem);
            let sigma = vec![s; problem.blocks.len()];
            reference_pd(problem, s, &sigma, REFERENCE_ITERATIONS, REFERENCE_TOLERANCE)?.point
        }
    })
}

/// Result of solving a built experiment.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: Vector,
    pub v: Vec<Vector>,
    pub trace: SolveTrace,
    pub kkt_residual: Option<f64>,
    /// The point compared against the reference (primal, stacked dual, or stacked primal-dual).
    pub compared: Vector,
}

pub fn solve(exp: &Experiment, opts: &SolveOptions) -> Result<SolveResult, CliError> {
    Ok(match exp {
        Experiment::Fb {
            problem,
            metric,
            steps,
            errors,
            x0,
        } => {
            let (x, trace) = fb_solve(problem, metric, steps, errors, x0, opts)?;
            SolveResult {
                compared: x.clone(),
                x,
                v: Vec::new(),
                trace,
                kkt_residual: None,
            }
        }
        Experiment::StrongPd {
            problem,
            dual_metrics,
            steps,
            errors,
            v0,
        } => {
            let sol = solve_strong_duality(problem, dual_metrics, steps, errors, v0, opts)?;
            SolveResult {
                compared: stack(&sol.v),
                x: sol.x,
                v: sol.v,
                trace: sol.trace,
                kkt_residual: None,
            }
        }
        Experiment::CocoercivePd {
            problem,
            metric,
            dual_metrics,
            relaxation,
            errors,
            x0,
            v0,
        } => {
            let start = ProductPoint::new(problem, x0.clone(), v0.clone())?;
            let sol = solve_cocoercive_pd(problem, metric, dual_metrics, relaxation, errors, &start, opts)?;
            let kkt = kkt_residual(problem, &sol.x, &sol.v)?;
            let mut parts = vec![sol.x.clone()];
            parts.extend(sol.v.iter().cloned());
            SolveResult {
                compared: stack(&parts),
                x: sol.x,
                v: sol.v,
                trace: sol.trace,
                kkt_residual: Some(kkt),
            }
        }
    })
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub summary: Summary,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub exit_code: i32,
}

pub fn exit_code_for(termination: Termination) -> i32 {
    match termination {
        Termination::Converged => EXIT_CONVERGED,
        Termination::Diverged | Termination::NonFinite => EXIT_DIVERGED,
        Termination::MaxIterations => EXIT_MAX_ITER,
    }
}

/// Builds, solves and writes the trace and summary into `out_dir`.
///
/// A strict-mode hypothesis failure is returned as [`CliError::Validation`] before
/// anything is written.
pub fn run_experiment(loaded: &LoadedConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let cfg = &loaded.config;
    let mut builder = Builder::new(cfg.seed, &loaded.base);
    let exp = builder.experiment(cfg)?;
    let reference = builder.reference(cfg.reference.as_ref())?;
    let n_check = cfg.stop.max_iter + 1;
    let report = hypotheses(&exp, n_check)?;
    report.enforce(policy(cfg.policy))?;

    let reference = match reference {
        Reference::None => None,
        Reference::Oracle => Some(oracle_reference(&exp)?),
        Reference::Point(p) => Some(p),
    };
    let mut opts = SolveOptions::new(StoppingRule::new(cfg.stop.tolerance, cfg.stop.max_iter))
        .with_policy(policy(cfg.policy))
        .without_iterates();
    if let Some(r) = &reference {
        opts = opts.with_reference(r.clone());
    }
    let start = Instant::now();
    if cfg.output.wall_clock {
        opts = opts.with_clock(Arc::new(StdClock(start)));
    }
    let result = solve(&exp, &opts)?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(out_dir.display().to_string(), e))?;
    let trace_path = out_dir.join(&cfg.output.trace);
    let summary_path = out_dir.join(&cfg.output.summary);
    write_trace_file(&result.trace, &trace_path)?;
    let summary = Summary {
        name: cfg.name.clone(),
        solver: cfg.solver.as_str().into(),
        seed: cfg.seed,
        policy: policy_name(cfg.policy).into(),
        termination: result.trace.termination.as_str().into(),
        converged: result.trace.converged(),
        iterations: result.trace.iterations(),
        final_residual: result.trace.final_residual(),
        wall_time_s: wall,
        validation_passed: result.trace.validation.passed(),
        kkt_residual: result.kkt_residual,
        max_fejer_violation: result.trace.max_fejer_violation(),
        distance_to_reference: reference.as_ref().map(|r| (r - &result.compared).norm()),
        solution: result.x.iter().copied().collect(),
        dual_solution: result.v.iter().map(|v| v.iter().copied().collect()).collect(),
        reference: reference.map(|r| r.iter().copied().collect()),
        assumptions: result.trace.assumptions.clone(),
        checks: check_summaries(&result.trace.validation),
    };
    write_summary_file(&summary, &summary_path)?;
    Ok(RunReport {
        exit_code: exit_code_for(result.trace.termination),
        summary,
        trace_path,
        summary_path,
    })
}

/// Hypothesis-by-hypothesis report lines and the overall verdict.
pub fn validate_config(loaded: &LoadedConfig) -> Result<(Vec<String>, bool), CliError> {
    let cfg = &loaded.config;
    let mut builder = Builder::new(cfg.seed, &loaded.base);
    let exp = builder.experiment(cfg)?;
    builder.reference(cfg.reference.as_ref())?;
    let report = hypotheses(&exp, cfg.stop.max_iter + 1)?;
    Ok((describe_validation(&report), report.passed()))
}

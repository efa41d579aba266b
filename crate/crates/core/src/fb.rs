//! The variable-metric forward-backward iteration
//!
//! ```text
//! y_n     = x_n − γ_n U_n (B x_n + b_n)
//! x_{n+1} = x_n + λ_n (J_{γ_n U_n A}(y_n) + a_n − x_n)
//! ```
//!
//! with stopping rules, error injection and quasi-Fejér diagnostics.
//!
//! In finite dimensions weak and strong convergence coincide, so no separate
//! strong-convergence mode is offered.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ensure_finite, Metric, Vector};
use crate::operators::{CocoerciveOperator, Modulus, ProxFunction, ResolventOperator};
use crate::schedules::{
    validate_theorem41, ErrorSchedule, MetricSchedule, StepSchedule, ValidationPolicy, ValidationReport,
};

/// Iterates are declared divergent once `‖x_n‖ > DIVERGENCE_FACTOR·(1 + ‖x_0‖)`.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

/// Find `x` with `0 ∈ Ax + Bx`, `A` maximally monotone and `B` cocoercive.
///
/// Nonemptiness of the zero set cannot be checked and is recorded as an assumption
/// in every trace.
#[derive(Clone, Debug)]
pub struct FbProblem {
    pub a: ResolventOperator,
    pub b: CocoerciveOperator,
}

impl FbProblem {
    pub fn new(a: ResolventOperator, b: CocoerciveOperator) -> Result<Self> {
        check_dim("forward-backward operators", a.dim(), b.dim())?;
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `‖J_{γUA}(x − γUBx) − x‖`.
    pub fn fixed_point_residual(&self, gamma: f64, u: &Metric, x: &Vector) -> Result<f64> {
        let bx = self.b.apply(x)?;
        let y = x - u.apply(&bx) * gamma;
        Ok((self.a.resolvent(gamma, u, &y)? - x).norm())
    }
}

/// Stop when the fixed-point residual drops to `tolerance` or after `max_iterations` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100_000,
        }
    }
}

impl StoppingRule {
    pub fn new(tolerance: f64, max_iterations: usize) -> Self {
        Self {
            tolerance,
            max_iterations,
        }
    }

    /// Runs exactly `max_iterations` steps (tolerance zero never triggers on its own).
    pub fn fixed(max_iterations: usize) -> Self {
        Self::new(-1.0, max_iterations)
    }
}

/// Why a solve returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Diverged,
    NonFinite,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::Diverged => "diverged",
            Self::NonFinite => "non_finite",
        }
    }
}

/// Monotonic nanosecond clock; the core crate has no time source of its own.
pub trait Clock: Send + Sync {
    fn now_ns(&self) -> u64;
}

/// Per-solve options.
#[derive(Clone, Default)]
pub struct SolveOptions {
    pub stop: StoppingRule,
    pub policy: ValidationPolicy,
    /// Reference solution for the quasi-Fejér columns of the trace.
    pub z_ref: Option<Vector>,
    /// Reference point for the cumulative `Σ‖Bx_n − Bx̄‖²` column.
    pub x_ref: Option<Vector>,
    /// Keep `x_n` and `y_n` in every record.
    pub record_iterates: bool,
    pub clock: Option<Arc<dyn Clock>>,
}

impl SolveOptions {
    pub fn new(stop: StoppingRule) -> Self {
        Self {
            stop,
            record_iterates: true,
            ..Self::default()
        }
    }

    pub fn with_policy(mut self, policy: ValidationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_reference(mut self, z: Vector) -> Self {
        self.x_ref = Some(z.clone());
        self.z_ref = Some(z);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn without_iterates(mut self) -> Self {
        self.record_iterates = false;
        self
    }

    fn now(&self) -> u64 {
        self.clock.as_ref().map_or(0, |c| c.now_ns())
    }
}

impl core::fmt::Debug for SolveOptions {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SolveOptions")
            .field("stop", &self.stop)
            .field("policy", &self.policy)
            .field("z_ref", &self.z_ref)
            .field("x_ref", &self.x_ref)
            .field("record_iterates", &self.record_iterates)
            .finish()
    }
}

/// State of one iteration.
///
/// Record `n` holds `x_n` and the quantities of the step `x_n → x_{n+1}`. The final
/// record has no step, so its Fejér fields are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub n: usize,
    /// `x_n` (empty when iterates are not recorded).
    pub x: Vector,
    /// `y_n` (empty when iterates are not recorded).
    pub y: Vector,
    /// Primal estimate for dual solvers (empty otherwise).
    pub primal: Vector,
    pub gamma: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Fixed-point residual at `x_n`.
    pub residual: f64,
    /// `‖x_{n+1} − z‖_{U_{n+1}⁻¹}`.
    pub fejer_lhs: Option<f64>,
    /// `(1 + η_n)‖x_n − z‖_{U_n⁻¹} + ε_n`.
    pub fejer_rhs: Option<f64>,
    /// `Σ_{k ≤ n} ‖Bx_k − Bx̄‖²`.
    pub b_drift: Option<f64>,
    pub wall_clock_ns: u64,
}

/// Append-only record of a solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    /// Hypotheses the library cannot check and takes on trust.
    pub assumptions: Vec<String>,
    pub validation: ValidationReport,
}

impl SolveTrace {
    pub(crate) fn new(assumptions: Vec<String>, validation: ValidationReport) -> Self {
        Self {
            records: Vec::new(),
            termination: Termination::MaxIterations,
            assumptions,
            validation,
        }
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.n)
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.residual)
    }

    /// Worst `lhs − rhs` over the recorded Fejér pairs.
    pub fn max_fejer_violation(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| Some(r.fejer_lhs? - r.fejer_rhs?))
            .reduce(f64::max)
    }
}

/// `δ = sup_n √(1 + η_n)` over the indices a solve of `horizon` steps can reach.
pub fn fejer_delta(ms: &MetricSchedule, horizon: usize) -> Result<f64> {
    let mut eta_max = 0.0_f64;
    for n in 0..horizon.min(ms.stationary_from()) {
        eta_max = eta_max.max(ms.eta(n)?);
    }
    Ok(libm::sqrt(1.0 + eta_max))
}

/// Coefficients of `ε_n = δ(‖a_n‖/√α + (2β − ε)‖b_n‖/√μ)` as `(c_a, c_b, c_γ)`, where
/// `ε_n = c_a‖a_n‖ + (c_b + c_γ γ_n)‖b_n‖`. The `γ_n` term replaces `(2β − ε)/μ`
/// when `B = 0` and the step size is unbounded.
pub fn fejer_error_coefficients(
    ms: &MetricSchedule,
    ss: &StepSchedule,
    beta: Modulus,
    delta: f64,
) -> (f64, f64, Option<f64>) {
    let ca = delta / libm::sqrt(ms.alpha());
    let mu = ms.mu_bound();
    match beta {
        Modulus::Finite(b) => (ca, delta * (2.0 * b - ss.epsilon) / libm::sqrt(mu), None),
        Modulus::Infinite => (ca, 0.0, Some(delta * libm::sqrt(mu))),
    }
}

fn fb_assumptions() -> Vec<String> {
    alloc::vec![String::from("zer(A + B) is nonempty")]
}

/// Runs the variable-metric forward-backward iteration from `x0`.
///
/// In strict mode the hypotheses are validated on the first `max_iterations + 1`
/// indices and a failure is returned as [`Error::ValidationFailed`]. Non-finite or
/// divergent iterates end the run early with the trace intact.
pub fn fb_solve(
    problem: &FbProblem,
    ms: &MetricSchedule,
    ss: &StepSchedule,
    es: &ErrorSchedule,
    x0: &Vector,
    opts: &SolveOptions,
) -> Result<(Vector, SolveTrace)> {
    let dim = problem.dim();
    check_dim("initial point", dim, x0.len())?;
    check_dim("metric schedule", dim, ms.dim())?;
    check_dim("error schedule a", dim, es.a.dim())?;
    check_dim("error schedule b", dim, es.b.dim())?;
    ensure_finite("initial point", x0)?;
    let beta = problem.b.beta();
    let report = validate_theorem41(ms, ss, beta, opts.stop.max_iterations + 1)?;
    report.enforce(opts.policy)?;
    let mut trace = SolveTrace::new(fb_assumptions(), report);

    let diagnostics = opts.z_ref.is_some();
    if let Some(z) = &opts.z_ref {
        check_dim("reference point", dim, z.len())?;
    }
    let (ca, cb, cb_gamma) = if diagnostics {
        let delta = fejer_delta(ms, opts.stop.max_iterations + 1)?;
        fejer_error_coefficients(ms, ss, beta, delta)
    } else {
        (0.0, 0.0, None)
    };
    let b_ref = match &opts.x_ref {
        Some(xr) => {
            check_dim("drift reference", dim, xr.len())?;
            Some(problem.b.apply(xr)?)
        }
        None => None,
    };
    let bound = DIVERGENCE_FACTOR * (1.0 + x0.norm());
    let empty = Vector::zeros(0);

    let mut x = x0.clone();
    let mut u = ms.metric(0)?;
    let mut drift = 0.0;
    for n in 0..=opts.stop.max_iterations {
        let gamma = ss.gamma.at(n);
        let lambda = ss.lambda.at(n);
        let bx = problem.b.apply(&x)?;
        if let Some(br) = &b_ref {
            drift += (&bx - br).norm_squared();
        }
        let b_err = es.b.at(n);
        let exact_forward = &x - u.apply(&bx) * gamma;
        let y = if es.b.norm_at(n) == 0.0 {
            exact_forward.clone()
        } else {
            &exact_forward - u.apply(&b_err) * gamma
        };
        let p = problem.a.resolvent(gamma, &u, &y)?;
        let residual = if es.b.norm_at(n) == 0.0 {
            (&p - &x).norm()
        } else {
            (problem.a.resolvent(gamma, &u, &exact_forward)? - &x).norm()
        };
        let mut record = IterRecord {
            n,
            x: if opts.record_iterates { x.clone() } else { empty.clone() },
            y: if opts.record_iterates { y.clone() } else { empty.clone() },
            primal: empty.clone(),
            gamma,
            lambda,
            eta: 0.0,
            residual,
            fejer_lhs: None,
            fejer_rhs: None,
            b_drift: b_ref.as_ref().map(|_| drift),
            wall_clock_ns: 0,
        };
        if !residual.is_finite() || !p.iter().all(|v| v.is_finite()) {
            record.wall_clock_ns = opts.now();
            trace.records.push(record);
            trace.termination = Termination::NonFinite;
            return Ok((x, trace));
        }
        if residual <= opts.stop.tolerance || n == opts.stop.max_iterations {
            record.wall_clock_ns = opts.now();
            trace.records.push(record);
            trace.termination = if residual <= opts.stop.tolerance {
                Termination::Converged
            } else {
                Termination::MaxIterations
            };
            return Ok((x, trace));
        }
        let x_next = &x + (&p + es.a.at(n) - &x) * lambda;
        let u_next = ms.metric(n + 1)?;
        record.eta = ms.eta(n)?;
        if let Some(z) = &opts.z_ref {
            let lhs = u_next.inverse_norm_of(&(&x_next - z));
            let cbn = cb + cb_gamma.map_or(0.0, |c| c * gamma);
            let eps_n = ca * es.a.norm_at(n) + cbn * es.b.norm_at(n);
            let rhs = (1.0 + record.eta) * u.inverse_norm_of(&(&x - z)) + eps_n;
            record.fejer_lhs = Some(lhs);
            record.fejer_rhs = Some(rhs);
        }
        record.wall_clock_ns = opts.now();
        trace.records.push(record);
        if !x_next.iter().all(|v| v.is_finite()) {
            trace.termination = Termination::NonFinite;
            return Ok((x, trace));
        }
        x = x_next;
        u = u_next;
        if x.norm() > bound {
            trace.termination = Termination::Diverged;
            return Ok((x, trace));
        }
    }
    unreachable!("the loop returns at n = max_iterations")
}

/// Minimizes `f + g` for a catalog function `f` and `∇g` cocoercive:
/// the backward step is `prox^{U_n⁻¹}_{γ_n f}`.
pub fn fb_minimize(
    f: &ProxFunction,
    grad_g: &CocoerciveOperator,
    ms: &MetricSchedule,
    ss: &StepSchedule,
    es: &ErrorSchedule,
    x0: &Vector,
    opts: &SolveOptions,
) -> Result<(Vector, SolveTrace)> {
    let problem = FbProblem::new(ResolventOperator::subdifferential(f.clone()), grad_g.clone())?;
    let (x, mut trace) = fb_solve(&problem, ms, ss, es, x0, opts)?;
    trace.assumptions.push("Argmin(f + g) is nonempty".into());
    Ok((x, trace))
}

/// Solves the variational inequality `⟨x − y, Bx⟩ + f(x) ≤ f(y)` for all `y`.
pub fn fb_variational_inequality(
    f: &ProxFunction,
    b: &CocoerciveOperator,
    ms: &MetricSchedule,
    ss: &StepSchedule,
    es: &ErrorSchedule,
    x0: &Vector,
    opts: &SolveOptions,
) -> Result<(Vector, SolveTrace)> {
    let problem = FbProblem::new(ResolventOperator::subdifferential(f.clone()), b.clone())?;
    let (x, mut trace) = fb_solve(&problem, ms, ss, es, x0, opts)?;
    trace
        .assumptions
        .push("the variational inequality has a solution".into());
    Ok((x, trace))
}

/// `max_y ⟨x − y, Bx⟩ + f(x) − f(y)` over the sample points.
pub fn vi_residual(f: &ProxFunction, b: &CocoerciveOperator, x: &Vector, samples: &[Vector]) -> Result<f64> {
    let bx = b.apply(x)?;
    let fx = f.value(x);
    let mut worst = f64::NEG_INFINITY;
    for y in samples {
        check_dim("VI sample", x.len(), y.len())?;
        worst = worst.max((x - y).dot(&bx) + fx - f.value(y));
    }
    Ok(worst)
}

/// Result of rechecking the quasi-Fejér inequality on a trace.
#[derive(Clone, Debug, PartialEq)]
pub struct FejerReport {
    /// `lhs_n − rhs_n` for every step.
    pub gaps: Vec<f64>,
    pub max_violation: f64,
    /// First step whose gap exceeds the tolerance.
    pub first_violation: Option<usize>,
}

impl FejerReport {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.max_violation <= tolerance
    }
}

/// Recomputes `‖x_{n+1} − z‖_{U_{n+1}⁻¹} ≤ (1 + η_n)‖x_n − z‖_{U_n⁻¹} + ε_n` from the
/// recorded iterates, independently of the solver's own columns.
pub fn fejer_diagnostic(
    trace: &SolveTrace,
    z: &Vector,
    ms: &MetricSchedule,
    ss: &StepSchedule,
    es: &ErrorSchedule,
    beta: Modulus,
    tolerance: f64,
) -> Result<FejerReport> {
    let steps = trace.records.len().saturating_sub(1);
    let delta = fejer_delta(ms, steps + 1)?;
    let (ca, cb, cbg) = fejer_error_coefficients(ms, ss, beta, delta);
    let mut gaps = Vec::with_capacity(steps);
    let mut first = None;
    let mut worst = f64::NEG_INFINITY;
    for n in 0..steps {
        let (r, next) = (&trace.records[n], &trace.records[n + 1]);
        if r.x.len() != z.len() || next.x.len() != z.len() {
            return Err(Error::InvalidParameter(
                "the Fejér diagnostic needs recorded iterates".into(),
            ));
        }
        let un = ms.metric(n)?;
        let un1 = ms.metric(n + 1)?;
        let lhs = un1.inverse_norm_of(&(&next.x - z));
        let eps_n = ca * es.a.norm_at(n) + (cb + cbg.map_or(0.0, |c| c * r.gamma)) * es.b.norm_at(n);
        let rhs = (1.0 + ms.eta(n)?) * un.inverse_norm_of(&(&r.x - z)) + eps_n;
        let gap = lhs - rhs;
        if gap > tolerance && first.is_none() {
            first = Some(n);
        }
        worst = worst.max(gap);
        gaps.push(gap);
    }
    Ok(FejerReport {
        gaps,
        max_violation: worst,
        first_violation: first,
    })
}

/// Partial sums of `Σ‖Bx_n − Bx̄‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub partial_sums: Vec<f64>,
    pub total: f64,
    /// Increase over the last quarter of the iterations.
    pub last_quarter_increment: f64,
}

impl DriftReport {
    /// Whether the last quarter added less than `fraction` of the total.
    pub fn plateaued(&self, fraction: f64) -> bool {
        self.last_quarter_increment <= fraction * self.total
    }
}

pub fn b_drift_diagnostic(trace: &SolveTrace, x_bar: &Vector, b: &CocoerciveOperator) -> Result<DriftReport> {
    let b_bar = b.apply(x_bar)?;
    let mut partial_sums = Vec::with_capacity(trace.records.len());
    let mut s = 0.0;
    for r in &trace.records {
        if r.x.len() != x_bar.len() {
            return Err(Error::InvalidParameter(
                "the drift diagnostic needs recorded iterates".into(),
            ));
        }
        s += (b.apply(&r.x)? - &b_bar).norm_squared();
        partial_sums.push(s);
    }
    let len = partial_sums.len();
    let last_quarter_increment = if len == 0 {
        0.0
    } else {
        let start = (3 * len) / 4;
        let before = if start == 0 { 0.0 } else { partial_sums[start - 1] };
        s - before
    };
    Ok(DriftReport {
        partial_sums,
        total: s,
        last_quarter_increment,
    })
}

/// `"{label}: {value}"` lines describing a trace's validation outcome.
pub fn describe_validation(report: &ValidationReport) -> Vec<String> {
    report
        .checks
        .iter()
        .map(|c| {
            format!(
                "[{}] {} (margin {:e}): {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.margin,
                c.detail
            )
        })
        .collect()
}

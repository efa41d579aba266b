//! Metric, step-size, relaxation and error sequences, with validators that check
//! the convergence hypotheses of the solvers on a finite prefix.
//!
//! Infinite conditions (a uniform bound on `‖U_n‖`, summability of `η_n` and of
//! the error norms) are guaranteed by the closed-form constructions below; the
//! validators recheck them numerically to catch implementation drift.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    block_diagonal, loewner_geq, max_eigenvalue, min_eigenvalue, spectral_norm, symmetrize, LinearMap, Matrix, Metric,
    Vector,
};
use crate::operators::Modulus;

/// Slack on the smallest eigenvalue used by Loewner-order checks, relative to `‖U_n‖`.
pub const LOEWNER_SLACK: f64 = 1e-10;

#[derive(Clone, Debug)]
struct Perturbed {
    base: Metric,
    direction: Matrix,
    direction_norm: f64,
    amplitude: f64,
    rho: f64,
    alpha: f64,
    mu: f64,
    stationary_from: usize,
}

impl Perturbed {
    fn coefficient(&self, n: usize) -> f64 {
        if n >= self.stationary_from {
            0.0
        } else {
            self.amplitude * libm::pow(self.rho, n as f64)
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Constant(Metric),
    Perturbed(Perturbed),
    Explicit(Vec<Metric>),
    Blocks(Vec<MetricSchedule>),
}

/// A sequence of metrics `(U_n)` in `P_α` with `sup ‖U_n‖ ≤ μ` and
/// `(1 + η_n) U_{n+1} ≽ U_n` for a summable `(η_n)`.
#[derive(Clone, Debug)]
pub struct MetricSchedule {
    kind: Kind,
    declared_mu: Option<f64>,
}

impl MetricSchedule {
    /// `U_n = U` for all `n`; `η_n = 0`.
    pub fn constant(u: Metric) -> Self {
        Self {
            kind: Kind::Constant(u),
            declared_mu: None,
        }
    }

    /// `U_n = U_base + amplitude·ρⁿ·D` for a symmetric direction `D`.
    ///
    /// The bound `α = λ_min(U_base) − |amplitude|·‖D‖` must be positive. Every step
    /// satisfies `(1 + η_n)U_{n+1} ≽ U_n` and `(1 + η_n)U_n ≽ U_{n+1}` with
    /// `η_n ≤ |amplitude|(1 − ρ)‖D‖ρⁿ/α`, a geometric and hence summable sequence.
    pub fn perturbed(base: Metric, direction: Matrix, amplitude: f64, rho: f64) -> Result<Self> {
        check_dim("perturbation direction", base.dim(), direction.nrows())?;
        let direction = symmetrize(&direction)?;
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "perturbation decay rate must lie in (0, 1), got {rho}"
            )));
        }
        if !amplitude.is_finite() {
            return Err(Error::NonFinite("perturbation amplitude"));
        }
        let direction_norm = spectral_norm(&direction);
        let spread = amplitude.abs() * direction_norm;
        let alpha = base.min_eigenvalue() - spread;
        if !(alpha > 0.0) {
            return Err(Error::LowerBoundViolated {
                min_eigenvalue: alpha,
                alpha: 0.0,
            });
        }
        let mu = base.norm() + spread;
        if spread == 0.0 {
            return Ok(Self::constant(base));
        }
        // Past this index the perturbation is below rounding of the base metric.
        let negligible = 1e-18 * base.min_eigenvalue();
        let mut stationary_from = 0usize;
        while spread * libm::pow(rho, stationary_from as f64) > negligible {
            stationary_from += 1;
        }
        Ok(Self {
            kind: Kind::Perturbed(Perturbed {
                base,
                direction,
                direction_norm,
                amplitude,
                rho,
                alpha,
                mu,
                stationary_from,
            }),
            declared_mu: None,
        })
    }

    /// The given metrics, then the last one repeated forever.
    pub fn explicit(metrics: Vec<Metric>) -> Result<Self> {
        let first = metrics
            .first()
            .ok_or_else(|| Error::InvalidParameter("explicit schedule needs a metric".into()))?;
        for m in &metrics {
            check_dim("explicit schedule", first.dim(), m.dim())?;
        }
        Ok(Self {
            kind: Kind::Explicit(metrics),
            declared_mu: None,
        })
    }

    /// Block-diagonal product `U_n = diag(U_{1,n}, …, U_{m,n})`.
    pub fn block_diagonal(blocks: Vec<MetricSchedule>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("block schedule needs a block".into()));
        }
        Ok(Self {
            kind: Kind::Blocks(blocks),
            declared_mu: None,
        })
    }

    /// Overrides the claimed `sup ‖U_n‖`; the validator checks the claim.
    pub fn with_declared_mu(mut self, mu: f64) -> Self {
        self.declared_mu = Some(mu);
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Constant(u) => u.dim(),
            Kind::Perturbed(p) => p.base.dim(),
            Kind::Explicit(v) => v[0].dim(),
            Kind::Blocks(b) => b.iter().map(|s| s.dim()).sum(),
        }
    }

    pub fn blocks(&self) -> Option<&[MetricSchedule]> {
        match &self.kind {
            Kind::Blocks(b) => Some(b),
            _ => None,
        }
    }

    /// `U_n`.
    pub fn metric(&self, n: usize) -> Result<Metric> {
        match &self.kind {
            Kind::Constant(u) => Ok(u.clone()),
            Kind::Perturbed(p) => {
                let c = p.coefficient(n);
                if c == 0.0 {
                    return Ok(p.base.clone());
                }
                let m = p.base.matrix() + &p.direction * c;
                Metric::new(m, p.alpha)
            }
            Kind::Explicit(v) => Ok(v[n.min(v.len() - 1)].clone()),
            Kind::Blocks(b) => {
                let ms = b.iter().map(|s| s.metric(n)).collect::<Result<Vec<_>>>()?;
                let refs: Vec<&Matrix> = ms.iter().map(|m| m.matrix()).collect();
                let alpha = ms.iter().map(|m| m.alpha()).fold(f64::INFINITY, f64::min);
                Metric::new(block_diagonal(&refs), alpha)
            }
        }
    }

    /// Index from which `U_n` no longer changes.
    pub fn stationary_from(&self) -> usize {
        match &self.kind {
            Kind::Constant(_) => 0,
            Kind::Perturbed(p) => p.stationary_from,
            Kind::Explicit(v) => v.len() - 1,
            Kind::Blocks(b) => b.iter().map(|s| s.stationary_from()).max().unwrap_or(0),
        }
    }

    /// Claimed `μ = sup_n ‖U_n‖`.
    pub fn mu_bound(&self) -> f64 {
        if let Some(mu) = self.declared_mu {
            return mu;
        }
        self.certified_mu()
    }

    fn certified_mu(&self) -> f64 {
        match &self.kind {
            Kind::Constant(u) => u.norm(),
            Kind::Perturbed(p) => p.mu,
            Kind::Explicit(v) => v.iter().map(|m| m.norm()).fold(0.0, f64::max),
            Kind::Blocks(b) => b.iter().map(|s| s.mu_bound()).fold(0.0, f64::max),
        }
    }

    /// Uniform lower bound `α` with `U_n ∈ P_α` for all `n`.
    pub fn alpha(&self) -> f64 {
        match &self.kind {
            Kind::Constant(u) => u.alpha(),
            Kind::Perturbed(p) => p.alpha,
            Kind::Explicit(v) => v.iter().map(|m| m.alpha()).fold(f64::INFINITY, f64::min),
            Kind::Blocks(b) => b.iter().map(|s| s.alpha()).fold(f64::INFINITY, f64::min),
        }
    }

    /// Smallest `η_n ≥ 0` with `(1 + η_n)U_{n+1} ≽ U_n`, from the generalized eigenvalues
    /// of the pair `(U_n, U_{n+1})`.
    pub fn eta(&self, n: usize) -> Result<f64> {
        match &self.kind {
            Kind::Constant(_) => Ok(0.0),
            Kind::Blocks(b) => {
                let mut e = 0.0_f64;
                for s in b {
                    e = e.max(s.eta(n)?);
                }
                Ok(e)
            }
            _ => {
                if n >= self.stationary_from() {
                    return Ok(0.0);
                }
                step_ratio(&self.metric(n)?, &self.metric(n + 1)?)
            }
        }
    }

    /// Closed-form upper bound on `η_n` certifying summability.
    pub fn eta_bound(&self, n: usize) -> Result<f64> {
        match &self.kind {
            Kind::Constant(_) => Ok(0.0),
            Kind::Perturbed(p) => {
                if n >= p.stationary_from {
                    return Ok(0.0);
                }
                let next = p.coefficient(n + 1);
                let diff = (p.coefficient(n) - next).abs();
                Ok(diff * p.direction_norm / p.alpha)
            }
            Kind::Explicit(_) => self.eta(n),
            Kind::Blocks(b) => {
                let mut e = 0.0_f64;
                for s in b {
                    e = e.max(s.eta_bound(n)?);
                }
                Ok(e)
            }
        }
    }

    /// `Σ_{k ≥ n} η_bound(k)`, in closed form.
    pub fn eta_tail(&self, n: usize) -> Result<f64> {
        match &self.kind {
            Kind::Constant(_) => Ok(0.0),
            Kind::Perturbed(p) => {
                let mut s = 0.0;
                for k in n..p.stationary_from {
                    s += self.eta_bound(k)?;
                }
                Ok(s)
            }
            Kind::Explicit(v) => {
                let mut s = 0.0;
                for k in n..v.len().saturating_sub(1) {
                    s += self.eta(k)?;
                }
                Ok(s)
            }
            Kind::Blocks(b) => {
                let mut s = 0.0;
                for sch in b {
                    s += sch.eta_tail(n)?;
                }
                Ok(s)
            }
        }
    }

    /// Whether `U_{n+1} ≽ U_n` holds for every `n` by construction.
    pub fn is_nondecreasing(&self) -> Result<bool> {
        match &self.kind {
            Kind::Constant(_) => Ok(true),
            Kind::Perturbed(p) => {
                // U_n − U_{n+1} = amplitude·ρⁿ(1 − ρ)·D, so the chain increases iff amplitude·D ≼ 0.
                let neg = &p.direction * (-p.amplitude);
                loewner_geq(&neg, &Matrix::zeros(neg.nrows(), neg.ncols()), 0.0)
            }
            Kind::Explicit(v) => {
                for w in v.windows(2) {
                    let slack = LOEWNER_SLACK * w[1].norm();
                    if !loewner_geq(w[1].matrix(), w[0].matrix(), slack)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Kind::Blocks(b) => {
                for s in b {
                    if !s.is_nondecreasing()? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Whether `(1 + ν_n)U_n ≽ U_{n+1}` holds with a summable `(ν_n)`. All constructors
    /// here provide it: perturbed schedules by the same two-sided eigenvalue bound, the
    /// others because they become constant after finitely many steps.
    pub fn has_reverse_chain(&self) -> bool {
        true
    }
}

/// Smallest `η ≥ 0` with `(1 + η)V ≽ U`: `max(0, λ_max(V^{-1/2} U V^{-1/2}) − 1)`.
pub fn step_ratio(u: &Metric, v: &Metric) -> Result<f64> {
    check_dim("step ratio", u.dim(), v.dim())?;
    let s = v.inv_sqrt_matrix() * u.matrix() * v.inv_sqrt_matrix();
    Ok((max_eigenvalue(&s)? - 1.0).max(0.0))
}

/// A real sequence given in closed form.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarSequence {
    Constant(f64),
    /// `values[n mod len]`.
    Cyclic(Vec<f64>),
}

impl ScalarSequence {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Cyclic(v) => v[n % v.len()],
        }
    }

    /// Number of distinct positions to inspect to cover every value.
    pub fn period(&self) -> usize {
        match self {
            Self::Constant(_) => 1,
            Self::Cyclic(v) => v.len(),
        }
    }
}

/// Step sizes `γ_n`, relaxations `λ_n` and the margin `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSchedule {
    pub epsilon: f64,
    pub gamma: ScalarSequence,
    pub lambda: ScalarSequence,
}

impl StepSchedule {
    pub fn new(epsilon: f64, gamma: ScalarSequence, lambda: ScalarSequence) -> Result<Self> {
        if let ScalarSequence::Cyclic(v) = &gamma {
            if v.is_empty() {
                return Err(Error::InvalidParameter("empty gamma sequence".into()));
            }
        }
        if let ScalarSequence::Cyclic(v) = &lambda {
            if v.is_empty() {
                return Err(Error::InvalidParameter("empty lambda sequence".into()));
            }
        }
        Ok(Self { epsilon, gamma, lambda })
    }

    /// Largest admissible `ε` for the given `β` and `μ`: `min{1, 2β/(μ+1)}`.
    pub fn epsilon_max(beta: Modulus, mu: f64) -> f64 {
        match beta {
            Modulus::Finite(b) => (2.0 * b / (mu + 1.0)).min(1.0),
            Modulus::Infinite => 1.0,
        }
    }

    /// `ε = 0.9·min{1, 2β/(μ+1)}`, `γ_n` the midpoint of `[ε, (2β − ε)/μ]`, `λ_n = 1`.
    pub fn default_for(beta: Modulus, mu: f64) -> Self {
        let epsilon = 0.9 * Self::epsilon_max(beta, mu);
        let gamma = match beta {
            Modulus::Finite(b) => 0.5 * (epsilon + (2.0 * b - epsilon) / mu),
            Modulus::Infinite => epsilon.max(1.0 / mu),
        };
        Self {
            epsilon,
            gamma: ScalarSequence::Constant(gamma),
            lambda: ScalarSequence::Constant(1.0),
        }
    }

    /// Same `ε` and `γ` with a constant relaxation.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = ScalarSequence::Constant(lambda);
        self
    }
}

/// An absolutely summable sequence of error vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorSequence {
    Zero(usize),
    /// `e_n = total·(1 − ratio)·ratioⁿ·d/‖d‖`, so that `Σ‖e_n‖ = total`.
    Geometric {
        direction: Vector,
        total: f64,
        ratio: f64,
    },
}

impl ErrorSequence {
    pub fn geometric(direction: Vector, total: f64, ratio: f64) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("error direction must be nonzero".into()));
        }
        if !(ratio > 0.0 && ratio < 1.0) || !(total >= 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "geometric errors need ratio in (0, 1) and total >= 0, got ratio {ratio}, total {total}"
            )));
        }
        Ok(Self::Geometric {
            direction: direction / norm,
            total,
            ratio,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Zero(n) => *n,
            Self::Geometric { direction, .. } => direction.len(),
        }
    }

    pub fn at(&self, n: usize) -> Vector {
        match self {
            Self::Zero(d) => Vector::zeros(*d),
            Self::Geometric {
                direction,
                total,
                ratio,
            } => direction * (total * (1.0 - ratio) * libm::pow(*ratio, n as f64)),
        }
    }

    pub fn norm_at(&self, n: usize) -> f64 {
        match self {
            Self::Zero(_) => 0.0,
            Self::Geometric { total, ratio, .. } => total * (1.0 - ratio) * libm::pow(*ratio, n as f64),
        }
    }

    /// `Σ_n ‖e_n‖`.
    pub fn total(&self) -> f64 {
        match self {
            Self::Zero(_) => 0.0,
            Self::Geometric { total, .. } => *total,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0.0
    }
}

/// Errors `(a_n)` in the backward step and `(b_n)` in the forward step.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSchedule {
    pub a: ErrorSequence,
    pub b: ErrorSequence,
}

impl ErrorSchedule {
    pub fn zero(dim: usize) -> Self {
        Self {
            a: ErrorSequence::Zero(dim),
            b: ErrorSequence::Zero(dim),
        }
    }

    /// `(Σ‖a_n‖, Σ‖b_n‖)`.
    pub fn norm_budget(&self) -> (f64, f64) {
        (self.a.total(), self.b.total())
    }
}

/// What a solver does when a hypothesis check fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ValidationPolicy {
    /// Refuse to run.
    #[default]
    Strict,
    /// Run anyway and keep the report in the trace.
    Warn,
}

/// Outcome of one hypothesis check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst signed distance to the boundary of the admissible region (negative when violated).
    pub margin: f64,
    /// First offending index for sequence conditions.
    pub index: Option<usize>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, margin: f64, index: Option<usize>, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: margin >= 0.0 && !margin.is_nan(),
            margin,
            index,
            detail,
        }
    }
}

/// Hypothesis-by-hypothesis report; validation never fails, it reports.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }

    /// Applies a policy: `Err` in strict mode when a check failed.
    pub fn enforce(&self, policy: ValidationPolicy) -> Result<()> {
        if policy == ValidationPolicy::Strict && !self.passed() {
            let msgs: Vec<String> = self.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
            return Err(Error::ValidationFailed(msgs.join("; ")));
        }
        Ok(())
    }
}

fn push_sequence_range(
    report: &mut ValidationReport,
    name: &str,
    seq: &ScalarSequence,
    lo: f64,
    hi: f64,
    n_check: usize,
) {
    report.push(check_sequence_range(name, seq, lo, hi, n_check));
}

/// Checks `lo ≤ s_n ≤ hi` for `n < n_check`.
pub fn check_sequence_range(name: &str, seq: &ScalarSequence, lo: f64, hi: f64, n_check: usize) -> Check {
    let mut worst = f64::INFINITY;
    let mut index = None;
    for n in 0..seq.period().min(n_check.max(1)) {
        let v = seq.at(n);
        let m = (v - lo).min(hi - v);
        let m = if v.is_finite() { m } else { f64::NEG_INFINITY };
        if m < worst {
            worst = m;
            if m < 0.0 && index.is_none() {
                index = Some(n);
            }
        }
    }
    let detail = match index {
        Some(n) => format!("value {} at n = {n} outside [{lo:e}, {hi:e}]", seq.at(n)),
        None => format!("all values in [{lo:e}, {hi:e}]"),
    };
    Check::new(name, worst, index, detail)
}

/// Checks `‖U_n‖ ≤ μ`, `U_n ≽ αId` and `(1 + η_n)U_{n+1} ≽ U_n` for `n < n_check`.
pub fn validate_metric_schedule(ms: &MetricSchedule, n_check: usize) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    let mu = ms.mu_bound();
    let alpha = ms.alpha();
    let horizon = n_check.min(ms.stationary_from() + 1).max(1);
    let mut worst_mu = f64::INFINITY;
    let mut mu_index = None;
    let mut worst_chain = f64::INFINITY;
    let mut chain_index = None;
    let mut worst_alpha = f64::INFINITY;
    let mut alpha_index = None;
    let mut worst_eta = f64::INFINITY;
    let mut eta_index = None;
    let mut current = ms.metric(0)?;
    for n in 0..horizon {
        let norm = current.norm();
        let m = mu * (1.0 + 1e-12) - norm;
        if m < worst_mu {
            worst_mu = m;
            if m < 0.0 && mu_index.is_none() {
                mu_index = Some(n);
            }
        }
        let a = current.min_eigenvalue() - alpha * (1.0 - 1e-12);
        if a < worst_alpha {
            worst_alpha = a;
            if a < 0.0 && alpha_index.is_none() {
                alpha_index = Some(n);
            }
        }
        let next = ms.metric(n + 1)?;
        let eta = ms.eta(n)?;
        let lhs = next.matrix() * (1.0 + eta);
        let gap = min_eigenvalue(&(lhs - current.matrix()))? + LOEWNER_SLACK * norm;
        if gap < worst_chain {
            worst_chain = gap;
            if gap < 0.0 && chain_index.is_none() {
                chain_index = Some(n);
            }
        }
        let bound = ms.eta_bound(n)?;
        // η_n comes from an eigenvalue problem, so it carries rounding noise near 1e-15.
        let e = bound * (1.0 + 1e-9) + 1e-12 - eta;
        if e < worst_eta {
            worst_eta = e;
            if e < 0.0 && eta_index.is_none() {
                eta_index = Some(n);
            }
        }
        current = next;
    }
    report.push(Check::new(
        "metric bound sup ‖U_n‖ ≤ μ",
        worst_mu,
        mu_index,
        match mu_index {
            Some(n) => format!("‖U_{n}‖ exceeds the declared μ = {mu:e}"),
            None => format!("μ = {mu:e} holds on {horizon} checked steps"),
        },
    ));
    report.push(Check::new(
        "lower bound U_n ≽ αId",
        worst_alpha,
        alpha_index,
        match alpha_index {
            Some(n) => format!("U_{n} has an eigenvalue below α = {alpha:e}"),
            None => format!("α = {alpha:e}"),
        },
    ));
    report.push(Check::new(
        "Loewner chain (1+η_n)U_{n+1} ≽ U_n",
        worst_chain,
        chain_index,
        match chain_index {
            Some(n) => format!("chain broken at n = {n}"),
            None => format!("holds on {horizon} checked steps"),
        },
    ));
    report.push(Check::new(
        "η_n below its summable bound",
        worst_eta,
        eta_index,
        format!("Σ η_n ≤ {:e}", ms.eta_tail(0)?),
    ));
    Ok(report)
}

/// Hypotheses of the variable-metric forward-backward theorem for a `β`-cocoercive
/// forward operator, checked on the first `n_check` indices.
pub fn validate_theorem41(
    ms: &MetricSchedule,
    ss: &StepSchedule,
    beta: Modulus,
    n_check: usize,
) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    let mu = ms.mu_bound();
    let eps_max = StepSchedule::epsilon_max(beta, mu);
    let eps = ss.epsilon;
    report.push(Check::new(
        "ε ∈ ]0, min{1, 2β/(μ+1)}]",
        eps.min(eps_max - eps),
        None,
        format!("ε = {eps:e}, upper end {eps_max:e}"),
    ));
    let gamma_hi = match beta {
        Modulus::Finite(b) => (2.0 * b - eps) / mu,
        Modulus::Infinite => f64::INFINITY,
    };
    push_sequence_range(&mut report, "γ_n ∈ [ε, (2β−ε)/μ]", &ss.gamma, eps, gamma_hi, n_check);
    push_sequence_range(&mut report, "λ_n ∈ [ε, 1]", &ss.lambda, eps, 1.0, n_check);
    report.extend(validate_metric_schedule(ms, n_check)?);
    Ok(report)
}

/// `(max_i sup_n ‖U_{i,n}‖) Σ‖L_i‖² < 2`.
pub fn check_best_approximation_norm(mu: f64, ls: &[LinearMap]) -> Check {
    let s: f64 = ls.iter().map(|l| l.norm() * l.norm()).sum();
    Check::new(
        "μ Σ‖L_i‖² < 2",
        // strict inequality: a zero margin fails
        if mu * s < 2.0 {
            2.0 - mu * s
        } else {
            -(mu * s - 2.0).max(f64::MIN_POSITIVE)
        },
        None,
        format!("μ Σ‖L_i‖² = {:e}", mu * s),
    )
}

/// Step-condition quantities of the primal-dual method for cocoercive problems.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corollary62Report {
    pub report: ValidationReport,
    /// `δ_n = (Σ_i ‖√U_{i,n} L_i √U_n‖²)^{-1/2} − 1`.
    pub delta: Vec<f64>,
    /// `ζ_n = δ_n / ((1 + δ_n) max{‖U_n‖, ‖U_{i,n}‖})`.
    pub zeta: Vec<f64>,
}

/// `(δ, ζ)` for one index.
pub fn delta_zeta(u: &Metric, duals: &[Metric], ls: &[LinearMap]) -> Result<(f64, f64)> {
    let mut s = 0.0;
    let mut max_norm = u.norm();
    for (ui, l) in duals.iter().zip(ls.iter()) {
        check_dim("coupling codomain", ui.dim(), l.codomain_dim())?;
        check_dim("coupling domain", u.dim(), l.domain_dim())?;
        let k = ui.sqrt_matrix() * l.matrix() * u.sqrt_matrix();
        let nk = spectral_norm(&k);
        s += nk * nk;
        max_norm = max_norm.max(ui.norm());
    }
    let delta = 1.0 / libm::sqrt(s) - 1.0;
    let zeta = delta / ((1.0 + delta) * max_norm);
    Ok((delta, zeta))
}

/// Hypotheses of the primal-dual method for cocoercive problems: monotone metrics,
/// `ε ∈ ]0, min{1, β}[`, and `ζ_n ≥ 1/(2β − ε)` with `δ_n > 0`.
pub fn validate_corollary62(
    primal: &MetricSchedule,
    duals: &[MetricSchedule],
    ls: &[LinearMap],
    beta: Modulus,
    epsilon: f64,
    n_check: usize,
) -> Result<Corollary62Report> {
    check_dim("dual schedules", ls.len(), duals.len())?;
    let mut report = ValidationReport::default();
    let b = beta.value();
    let eps_hi = b.min(1.0);
    let eps_margin = epsilon.min(eps_hi - epsilon);
    let eps_check = Check {
        passed: epsilon > 0.0 && epsilon < eps_hi,
        ..Check::new(
            "ε ∈ ]0, min{1, β}[",
            eps_margin,
            None,
            format!("ε = {epsilon:e}, β = {b:e}"),
        )
    };
    report.push(eps_check);
    let mut increasing = primal.is_nondecreasing()?;
    for d in duals {
        increasing &= d.is_nondecreasing()?;
    }
    report.push(Check::new(
        "U_{n+1} ≽ U_n for primal and dual metrics",
        if increasing { 0.0 } else { -1.0 },
        None,
        if increasing {
            "all metric schedules are nondecreasing".into()
        } else {
            "a metric schedule decreases somewhere".into()
        },
    ));
    let horizon = n_check
        .min(
            duals
                .iter()
                .map(|d| d.stationary_from())
                .chain(core::iter::once(primal.stationary_from()))
                .max()
                .unwrap_or(0)
                + 1,
        )
        .max(1);
    let target = 1.0 / (2.0 * b - epsilon);
    let mut deltas = Vec::with_capacity(horizon);
    let mut zetas = Vec::with_capacity(horizon);
    let mut worst_delta = f64::INFINITY;
    let mut delta_index = None;
    let mut worst_zeta = f64::INFINITY;
    let mut zeta_index = None;
    for n in 0..horizon {
        let u = primal.metric(n)?;
        let us = duals.iter().map(|d| d.metric(n)).collect::<Result<Vec<_>>>()?;
        let (delta, zeta) = delta_zeta(&u, &us, ls)?;
        if delta < worst_delta {
            worst_delta = delta;
            if delta <= 0.0 && delta_index.is_none() {
                delta_index = Some(n);
            }
        }
        let zm = zeta - target;
        if zm < worst_zeta {
            worst_zeta = zm;
            if zm < 0.0 && zeta_index.is_none() {
                zeta_index = Some(n);
            }
        }
        deltas.push(delta);
        zetas.push(zeta);
    }
    report.push(Check {
        passed: delta_index.is_none(),
        ..Check::new(
            "δ_n > 0",
            worst_delta,
            delta_index,
            match delta_index {
                Some(n) => format!(
                    "infeasible scaling at n = {n}: δ_n = (Σ‖√U_i L_i √U‖²)^(-1/2) − 1 = {:e} ≤ 0, the metrics are too large for the coupling operators",
                    deltas[n]
                ),
                None => format!("min δ_n = {worst_delta:e}"),
            },
        )
    });
    report.push(Check::new(
        "ζ_n ≥ 1/(2β−ε)",
        worst_zeta,
        zeta_index,
        match zeta_index {
            Some(n) => format!("ζ_{n} = {:e} < {target:e}", zetas[n]),
            None => format!("min margin {worst_zeta:e} above {target:e}"),
        },
    ));
    Ok(Corollary62Report {
        report,
        delta: deltas,
        zeta: zetas,
    })
}

/// Checks that a list of per-block error sequences matches block dimensions.
pub fn check_error_dims(errors: &[ErrorSequence], dims: &[usize]) -> Result<()> {
    check_dim("error blocks", dims.len(), errors.len())?;
    for (e, d) in errors.iter().zip(dims) {
        check_dim("error block", *d, e.dim())?;
    }
    Ok(())
}

/// Zero error sequences for the given block dimensions.
pub fn zero_errors(dims: &[usize]) -> Vec<ErrorSequence> {
    dims.iter().map(|d| ErrorSequence::Zero(*d)).collect()
}

/// `vec![x; n]` helper for uniform block initializations.
pub fn repeat_metric(u: &MetricSchedule, n: usize) -> Vec<MetricSchedule> {
    vec![u.clone(); n]
}

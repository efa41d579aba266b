//! Strongly monotone composite inclusions
//!
//! ```text
//! find x with  z ∈ Ax + Σ_i L_i*((B_i □ D_i)(L_i x − r_i)) + ρx
//! ```
//!
//! solved through their dual in `G_1 ⊕ … ⊕ G_m` by a parallel variable-metric
//! forward-backward iteration. The primal iterate is recovered at every step as
//! `x_n = J_{ρ⁻¹A}(ρ⁻¹(z − Σ L_i* v_{i,n}))`.
//!
//! The range condition guaranteeing a primal solution is not checkable from
//! resolvent oracles and is recorded as an assumption in the trace.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::fb::{fejer_delta, FbProblem, IterRecord, SolveOptions, SolveTrace, Termination, DIVERGENCE_FACTOR};
use crate::linalg::{ensure_finite, LinearMap, Matrix, Metric, Vector};
use crate::operators::{resolvent_of_inverse, CocoerciveOperator, ConvexSet, Modulus, ProxFunction, ResolventOperator};
use crate::schedules::{
    check_best_approximation_norm, check_error_dims, validate_metric_schedule, validate_theorem41, ErrorSequence,
    MetricSchedule, ScalarSequence, StepSchedule, ValidationReport,
};

/// One dual block `(L_i, B_i, D_i⁻¹, r_i)`.
#[derive(Clone, Debug)]
pub struct DualBlock {
    pub l: LinearMap,
    pub b: ResolventOperator,
    /// `D_i⁻¹`, `ν_i`-cocoercive when `D_i` is `ν_i`-strongly monotone.
    pub d_inv: CocoerciveOperator,
    pub r: Vector,
}

impl DualBlock {
    pub fn new(l: LinearMap, b: ResolventOperator, d_inv: CocoerciveOperator, r: Vector) -> Result<Self> {
        check_dim("dual block operator", l.codomain_dim(), b.dim())?;
        check_dim("dual block D⁻¹", l.codomain_dim(), d_inv.dim())?;
        check_dim("dual block offset", l.codomain_dim(), r.len())?;
        Ok(Self { l, b, d_inv, r })
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }
}

/// `z ∈ Ax + Σ L_i*((B_i □ D_i)(L_i x − r_i)) + ρx`.
#[derive(Clone, Debug)]
pub struct StronglyMonotoneProblem {
    pub z: Vector,
    pub rho: f64,
    pub a: ResolventOperator,
    pub blocks: Vec<DualBlock>,
}

impl StronglyMonotoneProblem {
    pub fn new(z: Vector, rho: f64, a: ResolventOperator, blocks: Vec<DualBlock>) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!("ρ must be positive, got {rho}")));
        }
        check_dim("primal operator", z.len(), a.dim())?;
        for (i, blk) in blocks.iter().enumerate() {
            check_dim("coupling domain", z.len(), blk.l.domain_dim())?;
            if blk.l.is_zero() {
                return Err(Error::ZeroCoupling(i + 1));
            }
        }
        Ok(Self { z, rho, a, blocks })
    }

    pub fn primal_dim(&self) -> usize {
        self.z.len()
    }

    pub fn dual_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    pub fn dual_dim(&self) -> usize {
        self.dual_dims().iter().sum()
    }

    /// `Σ L_i* v_i`.
    pub fn adjoint_sum(&self, v: &[Vector]) -> Result<Vector> {
        check_dim("dual variables", self.blocks.len(), v.len())?;
        let mut s = Vector::zeros(self.primal_dim());
        for (blk, vi) in self.blocks.iter().zip(v) {
            check_dim("dual variable", blk.dim(), vi.len())?;
            s += blk.l.adjoint(vi);
        }
        Ok(s)
    }

    /// `T(y) = J_{ρ⁻¹A}(ρ⁻¹(z − y))`.
    pub fn t_map(&self, y: &Vector) -> Result<Vector> {
        let id = Metric::identity(self.primal_dim());
        self.a.resolvent(1.0 / self.rho, &id, &((&self.z - y) / self.rho))
    }

    /// The dual forward operator `v ↦ (r_i + D_i⁻¹v_i − L_i T(Σ L_j* v_j))_i`, which is
    /// cocoercive with constant [`beta_dual`].
    pub fn dual_operator(&self) -> Result<CocoerciveOperator> {
        let me = self.clone();
        let dims = self.dual_dims();
        CocoerciveOperator::custom(
            self.dual_dim(),
            Modulus::Finite(beta_dual(self)),
            "dual operator D − L T L*",
            move |v: &Vector| {
                let parts = split(v, &dims);
                let s = me.adjoint_sum(&parts).expect("dimensions fixed at construction");
                let t = me.t_map(&s).expect("dimensions fixed at construction");
                let out: Vec<Vector> = me
                    .blocks
                    .iter()
                    .zip(&parts)
                    .map(|(blk, vi)| {
                        &blk.r + blk.d_inv.apply(vi).expect("dimensions fixed at construction") - blk.l.apply(&t)
                    })
                    .collect();
                stack(&out)
            },
        )
    }

    /// The dual inclusion `0 ∈ Av + Bv` in the product space, with `A = (B_i⁻¹)_i`
    /// and `B` the [`Self::dual_operator`].
    pub fn dual_product_problem(&self) -> Result<FbProblem> {
        let a = ResolventOperator::block_diagonal(self.blocks.iter().map(|b| b.b.formal_inverse()).collect())?;
        FbProblem::new(a, self.dual_operator()?)
    }
}

/// `β = 1/(max_i 1/ν_i + ρ⁻¹ Σ_i ‖L_i‖²)`.
pub fn beta_dual(p: &StronglyMonotoneProblem) -> f64 {
    let max_recip = p.blocks.iter().map(|b| b.d_inv.beta().reciprocal()).fold(0.0, f64::max);
    let s: f64 = p.blocks.iter().map(|b| b.l.norm() * b.l.norm()).sum();
    1.0 / (max_recip + s / p.rho)
}

/// `x = J_{ρ⁻¹A}(ρ⁻¹(z − Σ L_i* v_i))`.
pub fn primal_recovery(p: &StronglyMonotoneProblem, v: &[Vector]) -> Result<Vector> {
    p.t_map(&p.adjoint_sum(v)?)
}

/// Splits a stacked vector into consecutive blocks.
pub fn split(v: &Vector, dims: &[usize]) -> Vec<Vector> {
    let mut off = 0;
    dims.iter()
        .map(|&d| {
            let b = v.rows(off, d).into_owned();
            off += d;
            b
        })
        .collect()
}

/// Concatenates blocks.
pub fn stack(parts: &[Vector]) -> Vector {
    let n: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(n);
    let mut off = 0;
    for p in parts {
        out.rows_mut(off, p.len()).copy_from(p);
        off += p.len();
    }
    out
}

/// Errors `a_n` (primal), `b_{i,n}` (dual backward) and `d_{i,n}` (dual forward).
#[derive(Clone, Debug, PartialEq)]
pub struct DualErrors {
    pub a: ErrorSequence,
    pub b: Vec<ErrorSequence>,
    pub d: Vec<ErrorSequence>,
}

impl DualErrors {
    pub fn zero(primal_dim: usize, dual_dims: &[usize]) -> Self {
        Self {
            a: ErrorSequence::Zero(primal_dim),
            b: dual_dims.iter().map(|d| ErrorSequence::Zero(*d)).collect(),
            d: dual_dims.iter().map(|d| ErrorSequence::Zero(*d)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.iter().all(|e| e.is_zero()) && self.d.iter().all(|e| e.is_zero())
    }

    fn check(&self, p: &StronglyMonotoneProblem) -> Result<()> {
        check_dim("primal error", p.primal_dim(), self.a.dim())?;
        check_error_dims(&self.b, &p.dual_dims())?;
        check_error_dims(&self.d, &p.dual_dims())
    }
}

/// Primal and dual limits of a primal-dual solve.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub x: Vector,
    pub v: Vec<Vector>,
    pub trace: SolveTrace,
}

struct DualRun<'a> {
    problem: &'a StronglyMonotoneProblem,
    dual_ms: &'a [MetricSchedule],
    block_ms: MetricSchedule,
    gamma: ScalarSequence,
    lambda: ScalarSequence,
    beta: f64,
    epsilon: f64,
    errors: &'a DualErrors,
}

fn strong_assumptions() -> Vec<String> {
    vec![String::from(
        "the range condition of the primal inclusion holds (a primal solution exists)",
    )]
}

impl DualRun<'_> {
    fn metrics(&self, n: usize) -> Result<Vec<Metric>> {
        self.dual_ms.iter().map(|s| s.metric(n)).collect()
    }

    /// Backward points `J_{γU_iB_i⁻¹}(w_i)` for a given primal estimate.
    fn backward(
        &self,
        gamma: f64,
        us: &[Metric],
        v: &[Vector],
        x: &Vector,
        n: Option<usize>,
    ) -> Result<(Vec<Vector>, Vec<Vector>)> {
        let mut ws = Vec::with_capacity(v.len());
        let mut qs = Vec::with_capacity(v.len());
        for (i, blk) in self.problem.blocks.iter().enumerate() {
            let mut fwd = blk.l.apply(x) - &blk.r - blk.d_inv.apply(&v[i])?;
            if let Some(n) = n {
                if self.errors.d[i].norm_at(n) != 0.0 {
                    fwd -= self.errors.d[i].at(n);
                }
            }
            let w = &v[i] + us[i].apply(&fwd) * gamma;
            qs.push(resolvent_of_inverse(&blk.b, gamma, &us[i], &w)?);
            ws.push(w);
        }
        Ok((ws, qs))
    }

    fn run(&self, v0: &[Vector], opts: &SolveOptions, mut trace: SolveTrace) -> Result<DualSolution> {
        let p = self.problem;
        let dims = p.dual_dims();
        check_dim("initial dual variables", dims.len(), v0.len())?;
        for (d, v) in dims.iter().zip(v0) {
            check_dim("initial dual variable", *d, v.len())?;
            ensure_finite("initial dual variable", v)?;
        }
        self.errors.check(p)?;
        if let Some(z) = &opts.z_ref {
            check_dim("dual reference point", p.dual_dim(), z.len())?;
        }
        let z_ref = opts.z_ref.as_ref().map(|z| split(z, &dims));
        let (ca, cb) = if z_ref.is_some() {
            let delta = fejer_delta(&self.block_ms, opts.stop.max_iterations + 1)?;
            (
                delta / libm::sqrt(self.block_ms.alpha()),
                delta * (2.0 * self.beta - self.epsilon) / libm::sqrt(self.block_ms.mu_bound()),
            )
        } else {
            (0.0, 0.0)
        };
        let drift_op = match &opts.x_ref {
            Some(xr) => {
                check_dim("dual drift reference", p.dual_dim(), xr.len())?;
                let op = p.dual_operator()?;
                let bref = op.apply(xr)?;
                Some((op, bref))
            }
            None => None,
        };
        let exact = self.errors.is_zero();
        let v0_norm = stack(v0).norm();
        let bound = DIVERGENCE_FACTOR * (1.0 + v0_norm);
        let empty = Vector::zeros(0);

        let mut v: Vec<Vector> = v0.to_vec();
        let mut us = self.metrics(0)?;
        let mut drift = 0.0;
        for n in 0..=opts.stop.max_iterations {
            let gamma = self.gamma.at(n);
            let lambda = self.lambda.at(n);
            let x_exact = p.t_map(&p.adjoint_sum(&v)?)?;
            let a_n = self.errors.a.at(n);
            let x = if self.errors.a.norm_at(n) == 0.0 {
                x_exact.clone()
            } else {
                &x_exact + &a_n
            };
            let (ws, qs) = self.backward(gamma, &us, &v, &x, Some(n))?;
            let residual = if exact {
                residual_of(&qs, &v)
            } else {
                let (_, q_exact) = self.backward(gamma, &us, &v, &x_exact, None)?;
                residual_of(&q_exact, &v)
            };
            if let Some((op, bref)) = &drift_op {
                drift += (op.apply(&stack(&v))? - bref).norm_squared();
            }
            let mut record = IterRecord {
                n,
                x: if opts.record_iterates { stack(&v) } else { empty.clone() },
                y: if opts.record_iterates {
                    stack(&ws)
                } else {
                    empty.clone()
                },
                primal: if opts.record_iterates { x.clone() } else { empty.clone() },
                gamma,
                lambda,
                eta: 0.0,
                residual,
                fejer_lhs: None,
                fejer_rhs: None,
                b_drift: drift_op.as_ref().map(|_| drift),
                wall_clock_ns: 0,
            };
            let finite = residual.is_finite() && x.iter().all(|c| c.is_finite());
            if !finite || residual <= opts.stop.tolerance || n == opts.stop.max_iterations {
                record.wall_clock_ns = opts.clock.as_ref().map_or(0, |c| c.now_ns());
                trace.records.push(record);
                trace.termination = if !finite {
                    Termination::NonFinite
                } else if residual <= opts.stop.tolerance {
                    Termination::Converged
                } else {
                    Termination::MaxIterations
                };
                return Ok(DualSolution { x, v, trace });
            }
            let mut v_next = Vec::with_capacity(v.len());
            for (i, q) in qs.iter().enumerate() {
                let mut target = q.clone();
                if self.errors.b[i].norm_at(n) != 0.0 {
                    target += self.errors.b[i].at(n);
                }
                v_next.push(&v[i] + (target - &v[i]) * lambda);
            }
            let us_next = self.metrics(n + 1)?;
            record.eta = self.block_ms.eta(n)?;
            if let Some(zr) = &z_ref {
                let mut lhs2 = 0.0;
                let mut rhs2 = 0.0;
                let mut a_norm2 = 0.0;
                let mut b_norm2 = 0.0;
                for i in 0..v.len() {
                    let d = us_next[i].inverse_norm_of(&(&v_next[i] - &zr[i]));
                    lhs2 += d * d;
                    let d = us[i].inverse_norm_of(&(&v[i] - &zr[i]));
                    rhs2 += d * d;
                    let d = self.errors.b[i].norm_at(n);
                    a_norm2 += d * d;
                    let bi = self.errors.d[i].at(n) - p.blocks[i].l.apply(&a_n);
                    b_norm2 += bi.norm_squared();
                }
                let eps_n = ca * libm::sqrt(a_norm2) + cb * libm::sqrt(b_norm2);
                record.fejer_lhs = Some(libm::sqrt(lhs2));
                record.fejer_rhs = Some((1.0 + record.eta) * libm::sqrt(rhs2) + eps_n);
            }
            record.wall_clock_ns = opts.clock.as_ref().map_or(0, |c| c.now_ns());
            trace.records.push(record);
            if v_next.iter().any(|vi| !vi.iter().all(|c| c.is_finite())) {
                trace.termination = Termination::NonFinite;
                return Ok(DualSolution { x, v, trace });
            }
            v = v_next;
            us = us_next;
            if stack(&v).norm() > bound {
                trace.termination = Termination::Diverged;
                let x = p.t_map(&p.adjoint_sum(&v)?)?;
                return Ok(DualSolution { x, v, trace });
            }
        }
        unreachable!("the loop returns at n = max_iterations")
    }
}

fn residual_of(q: &[Vector], v: &[Vector]) -> f64 {
    libm::sqrt(q.iter().zip(v).map(|(a, b)| (a - b).norm_squared()).sum::<f64>())
}

fn check_schedules(p: &StronglyMonotoneProblem, dual_ms: &[MetricSchedule]) -> Result<MetricSchedule> {
    check_dim("dual metric schedules", p.blocks.len(), dual_ms.len())?;
    if dual_ms.is_empty() {
        return Err(Error::InvalidParameter(
            "the dual method needs at least one block".into(),
        ));
    }
    for (blk, ms) in p.blocks.iter().zip(dual_ms) {
        check_dim("dual metric schedule", blk.dim(), ms.dim())?;
    }
    MetricSchedule::block_diagonal(dual_ms.to_vec())
}

/// Runs the parallel primal-dual iteration
///
/// ```text
/// s_n     = z − Σ L_i* v_{i,n}
/// x_n     = J_{ρ⁻¹A}(ρ⁻¹ s_n) + a_n
/// w_{i,n} = v_{i,n} + γ_n U_{i,n}(L_i x_n − r_i − D_i⁻¹ v_{i,n} − d_{i,n})
/// v_{i,n+1} = v_{i,n} + λ_n (J_{γ_n U_{i,n} B_i⁻¹}(w_{i,n}) + b_{i,n} − v_{i,n})
/// ```
///
/// The trace indexes dual iterates (stacked) in `x` and the primal iterate in
/// `primal`; `opts.z_ref` and `opts.x_ref` refer to the stacked dual variable.
pub fn solve_strong_duality(
    p: &StronglyMonotoneProblem,
    dual_ms: &[MetricSchedule],
    ss: &StepSchedule,
    errors: &DualErrors,
    v0: &[Vector],
    opts: &SolveOptions,
) -> Result<DualSolution> {
    let block_ms = check_schedules(p, dual_ms)?;
    let beta = beta_dual(p);
    let report = validate_theorem41(&block_ms, ss, Modulus::Finite(beta), opts.stop.max_iterations + 1)?;
    report.enforce(opts.policy)?;
    let run = DualRun {
        problem: p,
        dual_ms,
        block_ms,
        gamma: ss.gamma.clone(),
        lambda: ss.lambda.clone(),
        beta,
        epsilon: ss.epsilon,
        errors,
    };
    run.run(v0, opts, SolveTrace::new(strong_assumptions(), report))
}

/// The smoothing term `ℓ_i` paired with `g_i` by infimal convolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothingTerm {
    /// `ℓ = ι_{0}`, so `g □ ℓ = g` and `∇ℓ* = 0`.
    ZeroIndicator,
    /// `ℓ = (ν/2)‖·‖²`, so `g □ ℓ` is a Moreau envelope and `∇ℓ* = Id/ν`.
    Quadratic { nu: f64 },
}

impl SmoothingTerm {
    /// `∇ℓ*` with its cocoercivity constant `ν`.
    pub fn gradient_conjugate(&self, dim: usize) -> Result<CocoerciveOperator> {
        match *self {
            Self::ZeroIndicator => Ok(CocoerciveOperator::zero(dim)),
            Self::Quadratic { nu } => {
                if !(nu > 0.0) || !nu.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "smoothing modulus must be positive, got {nu}"
                    )));
                }
                CocoerciveOperator::affine_with_beta(Matrix::identity(dim, dim) / nu, Vector::zeros(dim), nu)
            }
        }
    }

    /// `(g □ ℓ)(y)`.
    pub fn infimal_value(&self, g: &ProxFunction, y: &Vector) -> Result<f64> {
        match *self {
            Self::ZeroIndicator => Ok(g.value(y)),
            Self::Quadratic { nu } => {
                let p = g.prox(1.0 / nu, &Metric::identity(y.len()), y)?;
                Ok(g.value(&p) + 0.5 * nu * (y - &p).norm_squared())
            }
        }
    }

    /// `ℓ*(v)`.
    pub fn conjugate_value(&self, v: &Vector) -> f64 {
        match *self {
            Self::ZeroIndicator => 0.0,
            Self::Quadratic { nu } => v.norm_squared() / (2.0 * nu),
        }
    }
}

/// One term `(g_i □ ℓ_i)(L_i x − r_i)`.
#[derive(Clone, Debug)]
pub struct ConvexBlock {
    pub g: ProxFunction,
    pub smoothing: SmoothingTerm,
    pub l: LinearMap,
    pub r: Vector,
}

/// `minimize f(x) + Σ (g_i □ ℓ_i)(L_i x − r_i) + ½‖x − z‖²`.
#[derive(Clone, Debug)]
pub struct StronglyConvexProblem {
    pub z: Vector,
    pub f: ProxFunction,
    pub blocks: Vec<ConvexBlock>,
}

impl StronglyConvexProblem {
    /// The inclusion with `ρ = 1`, `A = ∂f`, `B_i = ∂g_i`, `D_i⁻¹ = ∇ℓ_i*`.
    pub fn to_inclusion(&self) -> Result<StronglyMonotoneProblem> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                DualBlock::new(
                    b.l.clone(),
                    ResolventOperator::subdifferential(b.g.clone()),
                    b.smoothing.gradient_conjugate(b.l.codomain_dim())?,
                    b.r.clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        StronglyMonotoneProblem::new(
            self.z.clone(),
            1.0,
            ResolventOperator::subdifferential(self.f.clone()),
            blocks,
        )
    }

    pub fn primal_objective(&self, x: &Vector) -> Result<f64> {
        let mut val = self.f.value(x) + 0.5 * (x - &self.z).norm_squared();
        for b in &self.blocks {
            val += b.smoothing.infimal_value(&b.g, &(b.l.apply(x) - &b.r))?;
        }
        Ok(val)
    }

    /// `f̃*(z − Σ L_i* v_i) + Σ (g_i*(v_i) + ℓ_i*(v_i) + ⟨v_i, r_i⟩)` with
    /// `f̃ = f + ½‖·‖²`; its minimum is minus the primal minimum.
    pub fn dual_objective(&self, v: &[Vector]) -> Result<f64> {
        check_dim("dual variables", self.blocks.len(), v.len())?;
        let mut u = self.z.clone();
        for (b, vi) in self.blocks.iter().zip(v) {
            u -= b.l.adjoint(vi);
        }
        let p = self.f.prox(1.0, &Metric::identity(u.len()), &u)?;
        let mut val = u.dot(&p) - self.f.value(&p) - 0.5 * p.norm_squared();
        for (b, vi) in self.blocks.iter().zip(v) {
            val += b.g.conjugate()?.value(vi) + b.smoothing.conjugate_value(vi) + vi.dot(&b.r);
        }
        Ok(val)
    }
}

/// Strongly convex minimization through the dual method: `x_n = prox_f s_n + a_n`
/// and `v_{i,n+1}` uses `prox^{U_{i,n}⁻¹}_{γ_n g_i*}`, evaluated from `prox g_i`.
pub fn solve_strongly_convex_min(
    problem: &StronglyConvexProblem,
    dual_ms: &[MetricSchedule],
    ss: &StepSchedule,
    errors: &DualErrors,
    v0: &[Vector],
    opts: &SolveOptions,
) -> Result<DualSolution> {
    let p = problem.to_inclusion()?;
    let mut sol = solve_strong_duality(&p, dual_ms, ss, errors, v0, opts)?;
    sol.trace
        .assumptions
        .push("z ∈ ran(∂f + Σ L_i*(∂g_i □ ∂ℓ_i)(L_i · − r_i) + Id)".into());
    Ok(sol)
}

/// `minimize ‖x − z‖` over `x ∈ C` with `L_i x ∈ r_i + D_i`.
#[derive(Clone, Debug)]
pub struct BestApproximationProblem {
    pub z: Vector,
    pub c: ConvexSet,
    /// `(D_i, L_i, r_i)`.
    pub constraints: Vec<(ConvexSet, LinearMap, Vector)>,
}

impl BestApproximationProblem {
    /// The inclusion with `ρ = 1`, `A = N_C`, `B_i = N_{D_i}`, `D_i⁻¹ = 0`.
    pub fn to_inclusion(&self) -> Result<StronglyMonotoneProblem> {
        let a = ResolventOperator::normal_cone(self.c.clone());
        let blocks = self
            .constraints
            .iter()
            .map(|(d, l, r)| {
                DualBlock::new(
                    l.clone(),
                    ResolventOperator::normal_cone(d.clone()),
                    CocoerciveOperator::zero(d.dim()),
                    r.clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        StronglyMonotoneProblem::new(self.z.clone(), 1.0, a, blocks)
    }

    /// Largest constraint violation `max(dist(x, C), max_i dist(L_i x − r_i, D_i))`.
    pub fn infeasibility(&self, x: &Vector) -> Result<f64> {
        let id = Metric::identity(x.len());
        let mut worst = (self.c.project(&id, x)? - x).norm();
        for (d, l, r) in &self.constraints {
            let y = l.apply(x) - r;
            let idd = Metric::identity(y.len());
            worst = worst.max((d.project(&idd, &y)? - &y).norm());
        }
        Ok(worst)
    }
}

/// Best approximation with `γ_n = λ_n = 1`:
///
/// ```text
/// x_n       = P_C s_n + a_n
/// w_{i,n}   = v_{i,n} + U_{i,n}(L_i x_n − r_i)
/// v_{i,n+1} = w_{i,n} − U_{i,n} P_{D_i}^{U_{i,n}}(U_{i,n}⁻¹ w_{i,n}) + b_{i,n}
/// ```
///
/// The validator enforces `(max_i sup_n ‖U_{i,n}‖) Σ‖L_i‖² < 2`.
pub fn solve_best_approximation(
    problem: &BestApproximationProblem,
    dual_ms: &[MetricSchedule],
    errors: &DualErrors,
    v0: &[Vector],
    opts: &SolveOptions,
) -> Result<DualSolution> {
    let p = problem.to_inclusion()?;
    let block_ms = check_schedules(&p, dual_ms)?;
    let mu = block_ms.mu_bound();
    let ls: Vec<LinearMap> = problem.constraints.iter().map(|(_, l, _)| l.clone()).collect();
    let mut report = ValidationReport::default();
    report.push(check_best_approximation_norm(mu, &ls));
    report.extend(validate_metric_schedule(&block_ms, opts.stop.max_iterations + 1)?);
    report.enforce(opts.policy)?;
    let beta = beta_dual(&p);
    // Largest ε for which γ = λ = 1 is admissible.
    let epsilon = (2.0 * beta - mu)
        .min(2.0 * beta / (mu + 1.0))
        .clamp(f64::MIN_POSITIVE, 1.0);
    let run = DualRun {
        problem: &p,
        dual_ms,
        block_ms,
        gamma: ScalarSequence::Constant(1.0),
        lambda: ScalarSequence::Constant(1.0),
        beta,
        epsilon,
        errors,
    };
    let mut assumptions = strong_assumptions();
    assumptions.push("the constraint qualification of the best approximation problem holds".into());
    run.run(v0, opts, SolveTrace::new(assumptions, report))
}

//! Composite inclusions with a cocoercive term
//!
//! ```text
//! find x with  z ∈ Ax + Σ_i L_i*((B_i □ D_i)(L_i x − r_i)) + Cx
//! ```
//!
//! solved together with their dual by a primal-dual forward-backward iteration in
//! `K = H ⊕ G_1 ⊕ … ⊕ G_m`. The step size is fixed to one; only the relaxation
//! `λ_n` and the metrics `U_n`, `U_{i,n}` are free.
//!
//! The solver runs the structured recursion, which only applies `U_n`, `U_{i,n}`
//! and `L_i`. The equivalent product-space forward-backward iteration in the dense
//! metric `V_n⁻¹` is exposed through [`PrimalDualOperator`] and
//! [`product_metric_matrix`] for cross-checking.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::fb::{FbProblem, IterRecord, SolveOptions, SolveTrace, Termination, DIVERGENCE_FACTOR};
use crate::linalg::{ensure_finite, invert, LinearMap, Matrix, Metric, Vector};
use crate::operators::{
    resolvent_of_inverse, CocoerciveOperator, Modulus, MonotoneOperator, ProxFunction, ResolventOperator,
};
use crate::schedules::{
    check_error_dims, check_sequence_range, validate_corollary62, Corollary62Report, ErrorSequence, MetricSchedule,
    ScalarSequence,
};
use crate::strong::{split, stack, ConvexBlock, DualBlock};

/// `z ∈ Ax + Σ L_i*((B_i □ D_i)(L_i x − r_i)) + Cx` with `C` cocoercive.
#[derive(Clone, Debug)]
pub struct CocoerciveProblem {
    pub z: Vector,
    pub a: ResolventOperator,
    pub c: CocoerciveOperator,
    pub blocks: Vec<DualBlock>,
}

impl CocoerciveProblem {
    pub fn new(z: Vector, a: ResolventOperator, c: CocoerciveOperator, blocks: Vec<DualBlock>) -> Result<Self> {
        check_dim("primal operator", z.len(), a.dim())?;
        check_dim("cocoercive operator", z.len(), c.dim())?;
        for (i, blk) in blocks.iter().enumerate() {
            check_dim("coupling domain", z.len(), blk.l.domain_dim())?;
            if blk.l.is_zero() {
                return Err(Error::ZeroCoupling(i + 1));
            }
        }
        Ok(Self { z, a, c, blocks })
    }

    pub fn primal_dim(&self) -> usize {
        self.z.len()
    }

    pub fn dual_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    /// Dimensions of the product space blocks `(H, G_1, …, G_m)`.
    pub fn product_dims(&self) -> Vec<usize> {
        let mut d = vec![self.primal_dim()];
        d.extend(self.dual_dims());
        d
    }

    pub fn product_dim(&self) -> usize {
        self.product_dims().iter().sum()
    }

    pub fn couplings(&self) -> Vec<LinearMap> {
        self.blocks.iter().map(|b| b.l.clone()).collect()
    }

    /// `β = min{μ_C, ν_1, …, ν_m}`.
    pub fn beta(&self) -> Modulus {
        self.blocks.iter().fold(self.c.beta(), |acc, b| acc.min(b.d_inv.beta()))
    }

    fn adjoint_sum(&self, v: &[Vector]) -> Vector {
        let mut s = Vector::zeros(self.primal_dim());
        for (blk, vi) in self.blocks.iter().zip(v) {
            s += blk.l.adjoint(vi);
        }
        s
    }
}

/// A point `(x, v_1, …, v_m)` of the product space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    pub x: Vector,
    pub v: Vec<Vector>,
}

impl ProductPoint {
    pub fn new(p: &CocoerciveProblem, x: Vector, v: Vec<Vector>) -> Result<Self> {
        check_dim("primal point", p.primal_dim(), x.len())?;
        check_dim("dual blocks", p.blocks.len(), v.len())?;
        for (d, vi) in p.dual_dims().iter().zip(&v) {
            check_dim("dual point", *d, vi.len())?;
        }
        Ok(Self { x, v })
    }

    pub fn zeros(p: &CocoerciveProblem) -> Self {
        Self {
            x: Vector::zeros(p.primal_dim()),
            v: p.dual_dims().iter().map(|d| Vector::zeros(*d)).collect(),
        }
    }

    pub fn stacked(&self) -> Vector {
        let mut parts = vec![self.x.clone()];
        parts.extend(self.v.iter().cloned());
        stack(&parts)
    }

    pub fn from_stacked(p: &CocoerciveProblem, s: &Vector) -> Result<Self> {
        check_dim("product point", p.product_dim(), s.len())?;
        let mut parts = split(s, &p.product_dims());
        let x = parts.remove(0);
        Ok(Self { x, v: parts })
    }
}

/// Errors `a_n`, `c_n` in `H` and `b_{i,n}`, `d_{i,n}` in `G_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdErrors {
    pub a: ErrorSequence,
    pub c: ErrorSequence,
    pub b: Vec<ErrorSequence>,
    pub d: Vec<ErrorSequence>,
}

impl PdErrors {
    pub fn zero(p: &CocoerciveProblem) -> Self {
        let dd = p.dual_dims();
        Self {
            a: ErrorSequence::Zero(p.primal_dim()),
            c: ErrorSequence::Zero(p.primal_dim()),
            b: dd.iter().map(|d| ErrorSequence::Zero(*d)).collect(),
            d: dd.iter().map(|d| ErrorSequence::Zero(*d)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.c.is_zero() && self.b.iter().all(|e| e.is_zero()) && self.d.iter().all(|e| e.is_zero())
    }

    fn check(&self, p: &CocoerciveProblem) -> Result<()> {
        check_dim("primal error a", p.primal_dim(), self.a.dim())?;
        check_dim("primal error c", p.primal_dim(), self.c.dim())?;
        check_error_dims(&self.b, &p.dual_dims())?;
        check_error_dims(&self.d, &p.dual_dims())
    }
}

/// Margin `ε` and relaxations `λ_n ∈ [ε, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Relaxation {
    pub epsilon: f64,
    pub lambda: ScalarSequence,
}

impl Relaxation {
    /// `ε = ½ min{1, β}` and `λ_n = 1`.
    pub fn default_for(beta: Modulus) -> Self {
        Self {
            epsilon: 0.5 * beta.value().min(1.0),
            lambda: ScalarSequence::Constant(1.0),
        }
    }
}

/// Validator output for the primal-dual method.
pub fn validate_pd(
    p: &CocoerciveProblem,
    primal_ms: &MetricSchedule,
    dual_ms: &[MetricSchedule],
    relax: &Relaxation,
    n_check: usize,
) -> Result<Corollary62Report> {
    check_dim("dual metric schedules", p.blocks.len(), dual_ms.len())?;
    check_dim("primal metric schedule", p.primal_dim(), primal_ms.dim())?;
    for (blk, ms) in p.blocks.iter().zip(dual_ms) {
        check_dim("dual metric schedule", blk.dim(), ms.dim())?;
    }
    let mut rep = validate_corollary62(primal_ms, dual_ms, &p.couplings(), p.beta(), relax.epsilon, n_check)?;
    rep.report.push(check_sequence_range(
        "λ_n ∈ [ε, 1]",
        &relax.lambda,
        relax.epsilon,
        1.0,
        n_check,
    ));
    Ok(rep)
}

/// Primal-dual limits.
#[derive(Clone, Debug)]
pub struct PdSolution {
    pub x: Vector,
    pub v: Vec<Vector>,
    pub trace: SolveTrace,
    pub validation: Corollary62Report,
}

fn pd_assumptions() -> Vec<String> {
    vec![String::from(
        "the range condition of the primal inclusion holds (a primal-dual solution exists)",
    )]
}

/// `⟨x, V x⟩` for the product metric `V = [[U⁻¹, −L*], [−L, U_i⁻¹]]`, computed blockwise.
fn v_quadratic(u: &Metric, us: &[Metric], ls: &[LinearMap], x: &Vector, v: &[Vector]) -> f64 {
    let nx = u.inverse_norm_of(x);
    let mut s = nx * nx;
    for ((ui, l), vi) in us.iter().zip(ls).zip(v) {
        let nv = ui.inverse_norm_of(vi);
        s += nv * nv - 2.0 * l.apply(x).dot(vi);
    }
    s
}

/// Runs
///
/// ```text
/// p_n       = J_{U_n A}(x_n − U_n(Σ L_i* v_{i,n} + C x_n + c_n − z)) + a_n
/// y_n       = 2 p_n − x_n
/// x_{n+1}   = x_n + λ_n (p_n − x_n)
/// q_{i,n}   = J_{U_{i,n} B_i⁻¹}(v_{i,n} + U_{i,n}(L_i y_n − D_i⁻¹ v_{i,n} − d_{i,n} − r_i)) + b_{i,n}
/// v_{i,n+1} = v_{i,n} + λ_n (q_{i,n} − v_{i,n})
/// ```
///
/// Trace records hold the stacked point `(x_n, v_n)` in `x`, the stacked backward
/// point `(p_n, q_n)` in `y` and `x_n` in `primal`. The residual is
/// `‖(p_n, q_n) − (x_n, v_n)‖` computed without errors. `opts.z_ref` is a stacked
/// primal-dual reference; the Fejér columns use the norm `‖·‖_{V_n}`.
pub fn solve_cocoercive_pd(
    p: &CocoerciveProblem,
    primal_ms: &MetricSchedule,
    dual_ms: &[MetricSchedule],
    relax: &Relaxation,
    errors: &PdErrors,
    start: &ProductPoint,
    opts: &SolveOptions,
) -> Result<PdSolution> {
    let start = ProductPoint::new(p, start.x.clone(), start.v.clone())?;
    ensure_finite("initial point", &start.stacked())?;
    errors.check(p)?;
    let validation = validate_pd(p, primal_ms, dual_ms, relax, opts.stop.max_iterations + 1)?;
    validation.report.enforce(opts.policy)?;
    let mut trace = SolveTrace::new(pd_assumptions(), validation.report.clone());
    let ls = p.couplings();
    let exact = errors.is_zero();

    let z_ref = match &opts.z_ref {
        Some(z) => Some(ProductPoint::from_stacked(p, z)?),
        None => None,
    };
    // Error coefficients of the Fejér bound for the product iteration in the metric V_n⁻¹.
    let (ca, cb) = if z_ref.is_some() {
        let alpha = primal_ms
            .alpha()
            .min(dual_ms.iter().map(|d| d.alpha()).fold(f64::INFINITY, f64::min));
        let l2: f64 = ls.iter().map(|l| l.norm() * l.norm()).sum();
        let rho_v = 1.0 / alpha + libm::sqrt(l2);
        let mu_v = validation.zeta.iter().map(|z| 1.0 / z).fold(0.0, f64::max);
        (libm::sqrt(rho_v), libm::sqrt(mu_v.max(0.0)))
    } else {
        (0.0, 0.0)
    };
    let drift = match &opts.x_ref {
        Some(xr) => {
            let r = ProductPoint::from_stacked(p, xr)?;
            let cr = p.c.apply(&r.x)?;
            let dr = p
                .blocks
                .iter()
                .zip(&r.v)
                .map(|(b, v)| b.d_inv.apply(v))
                .collect::<Result<Vec<_>>>()?;
            Some((cr, dr))
        }
        None => None,
    };
    let bound = DIVERGENCE_FACTOR * (1.0 + start.stacked().norm());
    let empty = Vector::zeros(0);
    let mut x = start.x;
    let mut v = start.v;
    let mut u = primal_ms.metric(0)?;
    let mut us = dual_ms.iter().map(|d| d.metric(0)).collect::<Result<Vec<_>>>()?;
    let mut drift_sum = 0.0;
    let step =
        |x: &Vector, v: &[Vector], u: &Metric, us: &[Metric], n: Option<usize>| -> Result<(Vector, Vec<Vector>)> {
            let cx = p.c.apply(x)?;
            let mut g = p.adjoint_sum(v) + cx - &p.z;
            if let Some(n) = n {
                if errors.c.norm_at(n) != 0.0 {
                    g += errors.c.at(n);
                }
            }
            let mut pn = p.a.resolvent(1.0, u, &(x - u.apply(&g)))?;
            if let Some(n) = n {
                if errors.a.norm_at(n) != 0.0 {
                    pn += errors.a.at(n);
                }
            }
            let y = &pn * 2.0 - x;
            let mut qs = Vec::with_capacity(v.len());
            for (i, blk) in p.blocks.iter().enumerate() {
                let mut fwd = blk.l.apply(&y) - blk.d_inv.apply(&v[i])? - &blk.r;
                if let Some(n) = n {
                    if errors.d[i].norm_at(n) != 0.0 {
                        fwd -= errors.d[i].at(n);
                    }
                }
                let mut q = resolvent_of_inverse(&blk.b, 1.0, &us[i], &(&v[i] + us[i].apply(&fwd)))?;
                if let Some(n) = n {
                    if errors.b[i].norm_at(n) != 0.0 {
                        q += errors.b[i].at(n);
                    }
                }
                qs.push(q);
            }
            Ok((pn, qs))
        };

    for n in 0..=opts.stop.max_iterations {
        let lambda = relax.lambda.at(n);
        let (pn, qs) = step(&x, &v, &u, &us, Some(n))?;
        let residual = if exact {
            pd_distance(&pn, &qs, &x, &v)
        } else {
            let (pe, qe) = step(&x, &v, &u, &us, None)?;
            pd_distance(&pe, &qe, &x, &v)
        };
        if let Some((cr, dr)) = &drift {
            drift_sum += (p.c.apply(&x)? - cr).norm_squared();
            for (i, blk) in p.blocks.iter().enumerate() {
                drift_sum += (blk.d_inv.apply(&v[i])? - &dr[i]).norm_squared();
            }
        }
        let mut record = IterRecord {
            n,
            x: if opts.record_iterates {
                stack_pd(&x, &v)
            } else {
                empty.clone()
            },
            y: if opts.record_iterates {
                stack_pd(&pn, &qs)
            } else {
                empty.clone()
            },
            primal: if opts.record_iterates { x.clone() } else { empty.clone() },
            gamma: 1.0,
            lambda,
            eta: 0.0,
            residual,
            fejer_lhs: None,
            fejer_rhs: None,
            b_drift: drift.as_ref().map(|_| drift_sum),
            wall_clock_ns: 0,
        };
        let finite = residual.is_finite();
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
            return Ok(PdSolution {
                x,
                v,
                trace,
                validation,
            });
        }
        let x_next = &x + (&pn - &x) * lambda;
        let v_next: Vec<Vector> = v.iter().zip(&qs).map(|(vi, qi)| vi + (qi - vi) * lambda).collect();
        let u_next = primal_ms.metric(n + 1)?;
        let us_next = dual_ms.iter().map(|d| d.metric(n + 1)).collect::<Result<Vec<_>>>()?;
        if let Some(zr) = &z_ref {
            let dx_next = &x_next - &zr.x;
            let dv_next: Vec<Vector> = v_next.iter().zip(&zr.v).map(|(a, b)| a - b).collect();
            let dx = &x - &zr.x;
            let dv: Vec<Vector> = v.iter().zip(&zr.v).map(|(a, b)| a - b).collect();
            let lhs = libm::sqrt(v_quadratic(&u_next, &us_next, &ls, &dx_next, &dv_next).max(0.0));
            let rhs0 = libm::sqrt(v_quadratic(&u, &us, &ls, &dx, &dv).max(0.0));
            let eps_n = if exact {
                0.0
            } else {
                let (an, bn) = product_errors(p, errors, n);
                ca * an + cb * bn
            };
            record.fejer_lhs = Some(lhs);
            record.fejer_rhs = Some(rhs0 + eps_n);
        }
        record.wall_clock_ns = opts.clock.as_ref().map_or(0, |c| c.now_ns());
        trace.records.push(record);
        if !x_next.iter().all(|c| c.is_finite()) || v_next.iter().any(|vi| !vi.iter().all(|c| c.is_finite())) {
            trace.termination = Termination::NonFinite;
            return Ok(PdSolution {
                x,
                v,
                trace,
                validation,
            });
        }
        x = x_next;
        v = v_next;
        u = u_next;
        us = us_next;
        if stack_pd(&x, &v).norm() > bound {
            trace.termination = Termination::Diverged;
            return Ok(PdSolution {
                x,
                v,
                trace,
                validation,
            });
        }
    }
    unreachable!("the loop returns at n = max_iterations")
}

/// Norms of the product-space errors `a_n = (a_n, b_{i,n})` and
/// `b_n = (S + V_n)a_n + (c_n, d_{i,n}) − (U_n⁻¹a_n, U_{i,n}⁻¹b_{i,n})`.
fn product_errors(p: &CocoerciveProblem, e: &PdErrors, n: usize) -> (f64, f64) {
    let a = e.a.at(n);
    let bs: Vec<Vector> = e.b.iter().map(|s| s.at(n)).collect();
    let mut an2 = a.norm_squared();
    for b in &bs {
        an2 += b.norm_squared();
    }
    // (S + V_n)(a, b) = (U⁻¹a, U_i⁻¹b_i − 2L_i a), so the U⁻¹ terms cancel.
    let bx = e.c.at(n);
    let mut bn2 = bx.norm_squared();
    for (i, blk) in p.blocks.iter().enumerate() {
        let bi = e.d[i].at(n) - blk.l.apply(&a) * 2.0;
        bn2 += bi.norm_squared();
    }
    (libm::sqrt(an2), libm::sqrt(bn2))
}

fn stack_pd(x: &Vector, v: &[Vector]) -> Vector {
    let mut parts = vec![x.clone()];
    parts.extend(v.iter().cloned());
    stack(&parts)
}

fn pd_distance(p: &Vector, q: &[Vector], x: &Vector, v: &[Vector]) -> f64 {
    let mut s = (p - x).norm_squared();
    for (qi, vi) in q.iter().zip(v) {
        s += (qi - vi).norm_squared();
    }
    libm::sqrt(s)
}

/// A scalar step `s` for which `U_n = s·Id`, `U_{i,n} = s·Id` satisfy the step
/// condition with `ε = ½ min{1, β}`: `ζ = (1 − s√Σ‖L_i‖²)/s ≥ 1/(2β − ε)`, with a 5% margin.
pub fn admissible_scalar_step(p: &CocoerciveProblem) -> f64 {
    let l2: f64 = p.blocks.iter().map(|b| b.l.norm() * b.l.norm()).sum();
    let k = match p.beta() {
        Modulus::Finite(b) => 1.0 / (2.0 * b - 0.5 * b.min(1.0)),
        Modulus::Infinite => 0.0,
    };
    let denom = libm::sqrt(l2) + k;
    if denom > 0.0 {
        0.95 / denom
    } else {
        1.0
    }
}

/// Unit-metric fixed-point residual of a primal-dual pair:
/// `max(‖x − J_A(x − (Σ L_i* v_i + Cx − z))‖, max_i ‖v_i − J_{B_i⁻¹}(v_i + L_i x − r_i − D_i⁻¹ v_i)‖)`.
pub fn kkt_residual(p: &CocoerciveProblem, x: &Vector, v: &[Vector]) -> Result<f64> {
    let pt = ProductPoint::new(p, x.clone(), v.to_vec())?;
    let id = Metric::identity(p.primal_dim());
    let g = p.adjoint_sum(&pt.v) + p.c.apply(x)? - &p.z;
    let mut worst = (p.a.resolvent(1.0, &id, &(x - g))? - x).norm();
    for (blk, vi) in p.blocks.iter().zip(v) {
        let idg = Metric::identity(blk.dim());
        let w = vi + blk.l.apply(x) - &blk.r - blk.d_inv.apply(vi)?;
        let q = resolvent_of_inverse(&blk.b, 1.0, &idg, &w)?;
        worst = worst.max((q - vi).norm());
    }
    Ok(worst)
}

/// The explicit product metric `V = [[U⁻¹, −L_1*, …, −L_m*], [−L_1, U_1⁻¹, 0, …], …]`.
pub fn product_metric_matrix(u: &Metric, us: &[Metric], ls: &[LinearMap]) -> Result<Matrix> {
    check_dim("product metric blocks", ls.len(), us.len())?;
    let n = u.dim();
    let total = n + us.iter().map(|m| m.dim()).sum::<usize>();
    let mut v = Matrix::zeros(total, total);
    v.view_mut((0, 0), (n, n)).copy_from(u.inverse_matrix());
    let mut off = n;
    for (ui, l) in us.iter().zip(ls) {
        let k = ui.dim();
        check_dim("coupling codomain", k, l.codomain_dim())?;
        check_dim("coupling domain", n, l.domain_dim())?;
        v.view_mut((off, off), (k, k)).copy_from(ui.inverse_matrix());
        v.view_mut((off, 0), (k, n)).copy_from(&(-l.matrix()));
        v.view_mut((0, off), (n, k)).copy_from(&(-l.matrix().transpose()));
        off += k;
    }
    Ok(v)
}

/// `V_n⁻¹` as a metric, the step metric of the product-space iteration.
pub fn product_step_metric(u: &Metric, us: &[Metric], ls: &[LinearMap]) -> Result<Metric> {
    let v = product_metric_matrix(u, us, ls)?;
    Metric::from_matrix(invert(&v)?)
}

/// The monotone operator `(x, v) ↦ (Σ L_i* v_i − z + Ax, (r_i − L_i x + B_i⁻¹ v_i)_i)` on
/// the product space.
///
/// Its resolvent is available for metrics `W` whose inverse has the structure of
/// [`product_metric_matrix`]; `U` and `U_i` are read off the diagonal blocks of `W⁻¹`
/// and any other metric is rejected.
#[derive(Clone, Debug)]
pub struct PrimalDualOperator {
    problem: CocoerciveProblem,
}

impl PrimalDualOperator {
    pub fn new(problem: CocoerciveProblem) -> Self {
        Self { problem }
    }
}

impl MonotoneOperator for PrimalDualOperator {
    fn dim(&self) -> usize {
        self.problem.product_dim()
    }

    fn descriptor(&self) -> String {
        format!("primal-dual operator with {} dual blocks", self.problem.blocks.len())
    }

    fn resolvent(&self, gamma: f64, w: &Metric, x: &Vector) -> Result<Vector> {
        let p = &self.problem;
        check_dim("primal-dual resolvent", self.dim(), x.len())?;
        if gamma != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "the primal-dual operator resolvent is implemented for unit steps, got {gamma}"
            )));
        }
        let v_mat = w.inverse_matrix();
        let dims = p.product_dims();
        let mut offs = Vec::with_capacity(dims.len());
        let mut o = 0;
        for d in &dims {
            offs.push(o);
            o += d;
        }
        let block_metric = |i: usize| -> Result<Metric> {
            let blk = v_mat.view((offs[i], offs[i]), (dims[i], dims[i])).into_owned();
            Metric::from_matrix(invert(&crate::linalg::symmetrize(&blk)?)?)
        };
        for (i, blk) in p.blocks.iter().enumerate() {
            let off = v_mat.view((offs[i + 1], 0), (dims[i + 1], dims[0]));
            let gap = (off + blk.l.matrix()).amax();
            if gap > 1e-8 * (1.0 + blk.l.matrix().amax()) {
                return Err(Error::InvalidParameter(format!(
                    "metric inverse does not couple block {} through -L (mismatch {gap:e})",
                    i + 1
                )));
            }
        }
        let u = block_metric(0)?;
        let pt = ProductPoint::from_stacked(p, x)?;
        let px =
            p.a.resolvent(1.0, &u, &(&pt.x - u.apply(&(p.adjoint_sum(&pt.v) - &p.z))))?;
        let y = &px * 2.0 - &pt.x;
        let mut out = vec![px];
        for (i, blk) in p.blocks.iter().enumerate() {
            let ui = block_metric(i + 1)?;
            let arg = &pt.v[i] + ui.apply(&(blk.l.apply(&y) - &blk.r));
            out.push(resolvent_of_inverse(&blk.b, 1.0, &ui, &arg)?);
        }
        Ok(stack(&out))
    }
}

/// The product-space inclusion `0 ∈ Ax + Bx` with `A` the [`PrimalDualOperator`] and
/// `B(x, v) = (Cx, D_1⁻¹v_1, …, D_m⁻¹v_m)`, cocoercive with constant `min{μ_C, ν_i}`.
pub fn product_problem(p: &CocoerciveProblem) -> Result<FbProblem> {
    let q = p.clone();
    let dims = p.product_dims();
    let b = CocoerciveOperator::custom(
        p.product_dim(),
        p.beta(),
        "product cocoercive operator",
        move |s: &Vector| {
            let parts = split(s, &dims);
            let mut out = vec![q.c.apply(&parts[0]).expect("dimensions fixed at construction")];
            for (blk, vi) in q.blocks.iter().zip(&parts[1..]) {
                out.push(blk.d_inv.apply(vi).expect("dimensions fixed at construction"));
            }
            stack(&out)
        },
    )?;
    FbProblem::new(ResolventOperator::new(PrimalDualOperator::new(p.clone())), b)
}

/// `minimize f(x) + Σ (g_i □ ℓ_i)(L_i x − r_i) + h(x) − ⟨x, z⟩` with `h` a convex
/// quadratic (or zero) whose gradient plays the role of `C`.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    pub z: Vector,
    pub f: ProxFunction,
    pub h: ProxFunction,
    pub blocks: Vec<ConvexBlock>,
}

impl CompositeProblem {
    /// `∇h`.
    pub fn gradient_h(&self) -> Result<CocoerciveOperator> {
        match &self.h {
            ProxFunction::Zero(n) => Ok(CocoerciveOperator::zero(*n)),
            ProxFunction::Quadratic { a, u } => CocoerciveOperator::gradient_of_quadratic(a.clone(), u.clone()),
            other => Err(Error::OutsideCatalog(format!(
                "smooth term must be a quadratic, got {}",
                other.descriptor()
            ))),
        }
    }

    /// `A = ∂f`, `C = ∇h`, `B_i = ∂g_i`, `D_i⁻¹ = ∇ℓ_i*`.
    pub fn to_inclusion(&self) -> Result<CocoerciveProblem> {
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
        CocoerciveProblem::new(
            self.z.clone(),
            ResolventOperator::subdifferential(self.f.clone()),
            self.gradient_h()?,
            blocks,
        )
    }

    pub fn primal_objective(&self, x: &Vector) -> Result<f64> {
        let mut val = self.f.value(x) + self.h.value(x) - x.dot(&self.z);
        for b in &self.blocks {
            val += b.smoothing.infimal_value(&b.g, &(b.l.apply(x) - &b.r))?;
        }
        Ok(val)
    }
}

/// Composite minimization through the primal-dual method; the backward steps are
/// `prox^{U_n⁻¹}_f` and `prox^{U_{i,n}⁻¹}_{g_i*}`.
pub fn solve_composite_min(
    problem: &CompositeProblem,
    primal_ms: &MetricSchedule,
    dual_ms: &[MetricSchedule],
    relax: &Relaxation,
    errors: &PdErrors,
    start: &ProductPoint,
    opts: &SolveOptions,
) -> Result<PdSolution> {
    let p = problem.to_inclusion()?;
    let mut sol = solve_cocoercive_pd(&p, primal_ms, dual_ms, relax, errors, start, opts)?;
    sol.trace
        .assumptions
        .push("z ∈ ran(∂f + Σ L_i*(∂g_i □ ∂ℓ_i)(L_i · − r_i) + ∇h)".into());
    Ok(sol)
}

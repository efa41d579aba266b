//! Independent reference solvers for verification
//!
//! These routines favour exactness over speed and share no code with the solvers
//! beyond the operator catalog. Every certificate is recomputed from scratch at the
//! returned point.

use alloc::format;
use alloc::vec::Vec;

use crate::cocoercive::CocoerciveProblem;
use crate::error::{check_dim, Error, Result};
use crate::fb::FbProblem;
use crate::linalg::{min_eigenvalue, spectral_norm, symmetrize, Matrix, Metric, Vector};
use crate::operators::{resolvent_of_inverse, ConvexSet, ScalarFunction};

/// Certificate tolerance, relative to the problem scale.
pub const CERTIFICATE_TOL: f64 = 1e-10;
/// Largest number of inequality rows handled by active-set enumeration.
pub const ENUMERATION_MAX_ROWS: usize = 20;
/// Cap on the number of active sets tried.
pub const ENUMERATION_BUDGET: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMethod {
    ActiveSetEnumeration,
    DualProjectedGradient,
    ClassicalForwardBackward,
    ClassicalPrimalDual,
}

/// A reference point with its optimality certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub point: Vector,
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    pub method: OracleMethod,
}

impl OracleSolution {
    pub fn worst_residual(&self) -> f64 {
        self.stationarity.max(self.feasibility).max(self.complementarity)
    }
}

/// Linear constraints `E x = e`, `G x ≤ h` assembled from catalog sets.
#[derive(Clone, Debug)]
struct Polyhedron {
    eq: Vec<(Vector, f64)>,
    ineq: Vec<(Vector, f64)>,
}

impl Polyhedron {
    fn from_sets(dim: usize, sets: &[ConvexSet]) -> Result<Self> {
        let mut eq = Vec::new();
        let mut ineq = Vec::new();
        for s in sets {
            check_dim("constraint set", dim, s.dim())?;
            match s {
                ConvexSet::HalfSpace { normal, offset } => ineq.push((normal.clone(), *offset)),
                ConvexSet::Box { lower, upper } => {
                    for i in 0..dim {
                        if upper[i].is_finite() {
                            let mut g = Vector::zeros(dim);
                            g[i] = 1.0;
                            ineq.push((g, upper[i]));
                        }
                        if lower[i].is_finite() {
                            let mut g = Vector::zeros(dim);
                            g[i] = -1.0;
                            ineq.push((g, -lower[i]));
                        }
                    }
                }
                ConvexSet::Affine { matrix, rhs } => {
                    for r in 0..matrix.nrows() {
                        eq.push((matrix.row(r).transpose(), rhs[r]));
                    }
                }
                ConvexSet::Singleton(p) => {
                    for i in 0..dim {
                        let mut g = Vector::zeros(dim);
                        g[i] = 1.0;
                        eq.push((g, p[i]));
                    }
                }
                ConvexSet::Whole(_) => {}
                other => {
                    return Err(Error::OutsideCatalog(format!(
                        "the QP oracle handles polyhedral sets only, got {}",
                        other.name()
                    )))
                }
            }
        }
        Ok(Self { eq, ineq })
    }
}

fn kkt_certificate(
    q: &Matrix,
    c: &Vector,
    poly: &Polyhedron,
    x: &Vector,
    mu: &[f64],
    lambda: &[f64],
) -> (f64, f64, f64) {
    let mut grad = q * x + c;
    for ((e, _), m) in poly.eq.iter().zip(mu) {
        grad += e * *m;
    }
    for ((g, _), l) in poly.ineq.iter().zip(lambda) {
        grad += g * *l;
    }
    let mut feas = 0.0_f64;
    for (e, rhs) in &poly.eq {
        feas = feas.max((e.dot(x) - rhs).abs());
    }
    let mut comp = 0.0_f64;
    for ((g, h), l) in poly.ineq.iter().zip(lambda) {
        let slack = h - g.dot(x);
        feas = feas.max(-slack);
        feas = feas.max(-l);
        comp = comp.max((l * slack).abs());
    }
    (grad.amax(), feas, comp)
}

fn problem_scale(q: &Matrix, c: &Vector, poly: &Polyhedron) -> f64 {
    let mut s = 1.0_f64.max(q.amax()).max(c.amax());
    for (_, r) in poly.eq.iter().chain(&poly.ineq) {
        s = s.max(r.abs());
    }
    s
}

/// Solves the KKT system with the rows in `active` treated as equalities.
fn solve_active(q: &Matrix, c: &Vector, poly: &Polyhedron, active: &[usize]) -> Option<(Vector, Vec<f64>, Vec<f64>)> {
    let n = q.nrows();
    let me = poly.eq.len();
    let k = me + active.len();
    let mut kkt = Matrix::zeros(n + k, n + k);
    let mut rhs = Vector::zeros(n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(q);
    for i in 0..n {
        rhs[i] = -c[i];
    }
    let rows = poly.eq.iter().chain(active.iter().map(|&j| &poly.ineq[j]));
    for (r, (a, b)) in rows.enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = a[j];
            kkt[(j, n + r)] = a[j];
        }
        rhs[n + r] = *b;
    }
    let sol = kkt.clone().lu().solve(&rhs)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    let resid = (&kkt * &sol - &rhs).amax();
    if resid > 1e-9 * (1.0 + rhs.amax()) {
        return None;
    }
    let x = sol.rows(0, n).into_owned();
    let mu: Vec<f64> = (0..me).map(|i| sol[n + i]).collect();
    let mut lambda = alloc::vec![0.0; poly.ineq.len()];
    for (t, &j) in active.iter().enumerate() {
        lambda[j] = sol[n + me + t];
    }
    Some((x, mu, lambda))
}

/// Minimizes `½⟨Qx, x⟩ + ⟨c, x⟩` over the intersection of polyhedral catalog sets
/// (half-spaces, boxes, affine subspaces, points).
///
/// Up to [`ENUMERATION_MAX_ROWS`] inequality rows are handled by enumerating active
/// sets in order of increasing size; larger instances use projected gradient on the
/// dual. The KKT certificate is recomputed at the returned point and must be below
/// [`CERTIFICATE_TOL`] times the problem scale.
pub fn qp_oracle(q: &Matrix, c: &Vector, constraints: &[ConvexSet]) -> Result<OracleSolution> {
    let n = c.len();
    check_dim("QP matrix", n, q.nrows())?;
    check_dim("QP matrix", n, q.ncols())?;
    let q = symmetrize(q)?;
    if min_eigenvalue(&q)? <= 0.0 {
        return Err(Error::Oracle("the QP oracle needs a positive definite Q".into()));
    }
    let poly = Polyhedron::from_sets(n, constraints)?;
    let tol = CERTIFICATE_TOL * problem_scale(&q, c, &poly);
    let m = poly.ineq.len();
    let (x, mu, lambda, method) = if m <= ENUMERATION_MAX_ROWS {
        let (x, mu, lambda) = enumerate_active_sets(&q, c, &poly, tol)?;
        (x, mu, lambda, OracleMethod::ActiveSetEnumeration)
    } else {
        let (x, mu, lambda) = dual_projected_gradient(&q, c, &poly, tol)?;
        (x, mu, lambda, OracleMethod::DualProjectedGradient)
    };
    let (stationarity, feasibility, complementarity) = kkt_certificate(&q, c, &poly, &x, &mu, &lambda);
    let sol = OracleSolution {
        point: x,
        stationarity,
        feasibility,
        complementarity,
        method,
    };
    if sol.worst_residual() > tol {
        return Err(Error::Oracle(format!(
            "QP certificate {:e} above tolerance {tol:e}",
            sol.worst_residual()
        )));
    }
    Ok(sol)
}

fn enumerate_active_sets(q: &Matrix, c: &Vector, poly: &Polyhedron, tol: f64) -> Result<(Vector, Vec<f64>, Vec<f64>)> {
    let n = q.nrows();
    let m = poly.ineq.len();
    let max_active = m.min(n.saturating_sub(poly.eq.len()));
    let mut tried: u64 = 0;
    let mut best: Option<(Vector, Vec<f64>, Vec<f64>, f64)> = None;
    for size in 0..=max_active {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            tried += 1;
            if tried > ENUMERATION_BUDGET {
                return Err(Error::Oracle("active-set enumeration budget exceeded".into()));
            }
            if let Some((x, mu, lambda)) = solve_active(q, c, poly, &subset) {
                let (s, f, cm) = kkt_certificate(q, c, poly, &x, &mu, &lambda);
                let worst = s.max(f).max(cm);
                if worst <= tol {
                    return Ok((x, mu, lambda));
                }
                if best.as_ref().is_none_or(|b| worst < b.3) {
                    best = Some((x, mu, lambda, worst));
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
    }
    match best {
        Some((_, _, _, w)) if w <= 1e3 * tol => Err(Error::Oracle(format!(
            "no active set certified below {tol:e}, best certificate {w:e}"
        ))),
        _ => Err(Error::Oracle("constraint set is infeasible".into())),
    }
}

fn next_combination(subset: &mut [usize], m: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < m - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Accelerated projected gradient on the dual of the QP. Multipliers of equalities
/// are free, those of inequalities are kept nonnegative.
fn dual_projected_gradient(
    q: &Matrix,
    c: &Vector,
    poly: &Polyhedron,
    tol: f64,
) -> Result<(Vector, Vec<f64>, Vec<f64>)> {
    let n = q.nrows();
    let me = poly.eq.len();
    let k = me + poly.ineq.len();
    let mut a = Matrix::zeros(k, n);
    let mut b = Vector::zeros(k);
    for (r, (row, rhs)) in poly.eq.iter().chain(&poly.ineq).enumerate() {
        a.set_row(r, &row.transpose());
        b[r] = *rhs;
    }
    let qinv = q
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Oracle("Cholesky factorization of Q failed".into()))?
        .inverse();
    let h = &a * &qinv * a.transpose();
    let lip = spectral_norm(&symmetrize(&h)?).max(f64::MIN_POSITIVE);
    let primal = |y: &Vector| -> Vector { -(&qinv * (c + a.transpose() * y)) };
    let project = |y: &mut Vector| {
        for i in me..k {
            y[i] = y[i].max(0.0);
        }
    };
    let mut y = Vector::zeros(k);
    let mut w = y.clone();
    let mut t = 1.0_f64;
    for it in 0..5_000_000usize {
        // The dual gradient at w is A x(w) − b.
        let xw = primal(&w);
        let mut y_next = &w + (&a * &xw - &b) / lip;
        project(&mut y_next);
        let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        w = &y_next + (&y_next - &y) * ((t - 1.0) / t_next);
        y = y_next;
        t = t_next;
        if it.is_multiple_of(50) {
            let x = primal(&y);
            let mu: Vec<f64> = (0..me).map(|i| y[i]).collect();
            let lambda: Vec<f64> = (me..k).map(|i| y[i]).collect();
            let (s, f, cm) = kkt_certificate(q, c, poly, &x, &mu, &lambda);
            if s.max(f).max(cm) <= tol {
                return Ok((x, mu, lambda));
            }
            // Restart the momentum to keep the iteration monotone.
            w = y.clone();
            t = 1.0;
        }
    }
    Err(Error::Oracle(
        "dual projected gradient did not reach the certificate tolerance".into(),
    ))
}

/// One-sided derivatives `(φ'_−(s), φ'_+(s))`, with `±∞` outside the domain.
fn one_sided_derivatives(phi: &ScalarFunction, s: f64) -> (f64, f64) {
    const INF: f64 = f64::INFINITY;
    match *phi {
        ScalarFunction::Hinge {
            center,
            lo_slope,
            hi_slope,
        } => {
            if s > center {
                (hi_slope, hi_slope)
            } else if s < center {
                if lo_slope == -INF {
                    (-INF, -INF)
                } else {
                    (lo_slope, lo_slope)
                }
            } else {
                (lo_slope, hi_slope)
            }
        }
        ScalarFunction::LinearOnInterval { slope, lo, hi } => {
            if s < lo {
                (-INF, -INF)
            } else if s > hi {
                (INF, INF)
            } else {
                let left = if s == lo { -INF } else { slope };
                let right = if s == hi { INF } else { slope };
                (left, right)
            }
        }
        ScalarFunction::Quadratic { a, b } => (a * s + b, a * s + b),
    }
}

/// `argmin_s weight·φ(s) + ½(s − t)²` by bisection on the one-sided derivatives of
/// the objective, to absolute accuracy `1e-12·(1 + |t|)`.
pub fn scalar_prox_oracle(phi: &ScalarFunction, weight: f64, t: f64) -> Result<f64> {
    if !(weight > 0.0) || !weight.is_finite() || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scalar prox oracle needs weight > 0 and finite t, got weight = {weight}, t = {t}"
        )));
    }
    phi.validate()?;
    let d = |s: f64| {
        let (l, r) = one_sided_derivatives(phi, s);
        (weight * l + s - t, weight * r + s - t)
    };
    let mut width = 1.0 + t.abs();
    let mut lo = t - width;
    let mut hi = t + width;
    loop {
        let lo_ok = d(lo).1 < 0.0;
        let hi_ok = d(hi).0 > 0.0;
        if lo_ok && hi_ok {
            break;
        }
        width *= 2.0;
        if !width.is_finite() {
            return Err(Error::Oracle("could not bracket the scalar minimizer".into()));
        }
        if !lo_ok {
            lo = t - width;
        }
        if !hi_ok {
            hi = t + width;
        }
    }
    let acc = 1e-12 * (1.0 + t.abs());
    while hi - lo > acc {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let (dl, dr) = d(m);
        if dr < 0.0 {
            lo = m;
        } else if dl > 0.0 {
            hi = m;
        } else {
            return Ok(m);
        }
    }
    // Kinks make the exact kink location the answer when it lies in the bracket.
    let kink = match *phi {
        ScalarFunction::Hinge { center, .. } => Some(center),
        ScalarFunction::LinearOnInterval { lo: a, hi: b, .. } => {
            if a >= lo && a <= hi {
                Some(a)
            } else {
                Some(b)
            }
        }
        ScalarFunction::Quadratic { .. } => None,
    };
    if let Some(k) = kink {
        if k >= lo && k <= hi {
            let (dl, dr) = d(k);
            if dl <= 0.0 && dr >= 0.0 {
                return Ok(k);
            }
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The classical loop `x_{k+1} = J_{γA}(x_k − γ B x_k)` with the Euclidean metric,
/// returning every iterate `x_0, …, x_iterations`.
pub fn classical_fb_iterates(problem: &FbProblem, gamma: f64, x0: &Vector, iterations: usize) -> Result<Vec<Vector>> {
    check_dim("initial point", problem.dim(), x0.len())?;
    let id = Metric::identity(problem.dim());
    let mut out = Vec::with_capacity(iterations + 1);
    let mut x = x0.clone();
    out.push(x.clone());
    for _ in 0..iterations {
        let fwd = &x - problem.b.apply(&x)? * gamma;
        x = problem.a.resolvent(gamma, &id, &fwd)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// Long-horizon classical forward-backward run with a fixed step `γ ∈ ]0, 2β[`.
///
/// Stops once the Euclidean fixed-point residual `‖J_{γA}(x − γBx) − x‖` falls
/// below `tolerance`; fails if that does not happen within `iterations` steps.
pub fn reference_fb(
    problem: &FbProblem,
    gamma: f64,
    x0: &Vector,
    iterations: usize,
    tolerance: f64,
) -> Result<OracleSolution> {
    check_dim("initial point", problem.dim(), x0.len())?;
    let beta = problem.b.beta().value();
    if !(gamma > 0.0) || gamma >= 2.0 * beta {
        return Err(Error::InvalidParameter(format!(
            "reference forward-backward needs 0 < γ < 2β = {}, got {gamma}",
            2.0 * beta
        )));
    }
    let id = Metric::identity(problem.dim());
    let mut x = x0.clone();
    for _ in 0..=iterations {
        let fwd = &x - problem.b.apply(&x)? * gamma;
        let next = problem.a.resolvent(gamma, &id, &fwd)?;
        let step = (&next - &x).norm();
        if !step.is_finite() {
            return Err(Error::Oracle(
                "reference forward-backward produced a non-finite iterate".into(),
            ));
        }
        if step <= tolerance {
            let stationarity = problem.fixed_point_residual(gamma, &id, &next)?;
            return Ok(OracleSolution {
                point: next,
                stationarity,
                feasibility: 0.0,
                complementarity: 0.0,
                method: OracleMethod::ClassicalForwardBackward,
            });
        }
        x = next;
    }
    Err(Error::Oracle(format!(
        "reference forward-backward residual above {tolerance:e} after {iterations} iterations"
    )))
}

/// One step of the fixed-metric primal-dual loop with scalar step sizes `τ`, `σ_i`:
///
/// ```text
/// p   = J_{τA}(x − τ(Σ L_i* v_i + Cx − z))
/// q_i = J_{σ_i B_i⁻¹}(v_i + σ_i(L_i(2p − x) − D_i⁻¹v_i − r_i))
/// ```
fn classical_pd_step(
    problem: &CocoerciveProblem,
    tau: f64,
    sigma: &[f64],
    x: &Vector,
    v: &[Vector],
) -> Result<(Vector, Vec<Vector>)> {
    let n = problem.primal_dim();
    let mut g = problem.c.apply(x)? - &problem.z;
    for (blk, vi) in problem.blocks.iter().zip(v) {
        g += blk.l.matrix().transpose() * vi;
    }
    let p = problem.a.resolvent(tau, &Metric::identity(n), &(x - g * tau))?;
    let y = &p * 2.0 - x;
    let mut q = Vec::with_capacity(v.len());
    for ((blk, vi), s) in problem.blocks.iter().zip(v).zip(sigma) {
        let k = blk.dim();
        let w = vi + (blk.l.matrix() * &y - blk.d_inv.apply(vi)? - &blk.r) * *s;
        q.push(resolvent_of_inverse(&blk.b, *s, &Metric::identity(k), &w)?);
    }
    Ok((p, q))
}

fn check_pd_steps(problem: &CocoerciveProblem, tau: f64, sigma: &[f64]) -> Result<()> {
    check_dim("dual step sizes", problem.blocks.len(), sigma.len())?;
    if !(tau > 0.0) || sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter(
            "primal-dual step sizes must be positive".into(),
        ));
    }
    Ok(())
}

/// Iterates `(x_k, v_k)`, `k = 0, …, iterations`, of the fixed-metric primal-dual loop
/// with relaxation `λ`.
pub fn classical_pd_iterates(
    problem: &CocoerciveProblem,
    tau: f64,
    sigma: &[f64],
    lambda: f64,
    x0: &Vector,
    v0: &[Vector],
    iterations: usize,
) -> Result<Vec<(Vector, Vec<Vector>)>> {
    check_pd_steps(problem, tau, sigma)?;
    let mut out = Vec::with_capacity(iterations + 1);
    let mut x = x0.clone();
    let mut v = v0.to_vec();
    out.push((x.clone(), v.clone()));
    for _ in 0..iterations {
        let (p, q) = classical_pd_step(problem, tau, sigma, &x, &v)?;
        x = &x + (p - &x) * lambda;
        v = v.iter().zip(&q).map(|(vi, qi)| vi + (qi - vi) * lambda).collect();
        out.push((x.clone(), v.clone()));
    }
    Ok(out)
}

/// Long-horizon fixed-metric primal-dual run from the origin.
///
/// The caller chooses admissible steps, for instance with
/// [`crate::schedules::validate_corollary62`] on scalar metrics. The run stops once
/// `‖(p, q) − (x, v)‖ ≤ tolerance`; the returned point stacks `x` and the `v_i` and
/// its stationarity is the unit-metric KKT residual.
pub fn reference_pd(
    problem: &CocoerciveProblem,
    tau: f64,
    sigma: &[f64],
    iterations: usize,
    tolerance: f64,
) -> Result<OracleSolution> {
    check_pd_steps(problem, tau, sigma)?;
    let mut x = Vector::zeros(problem.primal_dim());
    let mut v: Vec<Vector> = problem.dual_dims().iter().map(|k| Vector::zeros(*k)).collect();
    for _ in 0..=iterations {
        let (p, q) = classical_pd_step(problem, tau, sigma, &x, &v)?;
        let mut step = (&p - &x).norm_squared();
        for (qi, vi) in q.iter().zip(&v) {
            step += (qi - vi).norm_squared();
        }
        let step = libm::sqrt(step);
        if !step.is_finite() {
            return Err(Error::Oracle(
                "reference primal-dual produced a non-finite iterate".into(),
            ));
        }
        x = p;
        v = q;
        if step <= tolerance {
            let stationarity = crate::cocoercive::kkt_residual(problem, &x, &v)?;
            let mut parts = alloc::vec![x];
            parts.extend(v);
            return Ok(OracleSolution {
                point: crate::strong::stack(&parts),
                stationarity,
                feasibility: 0.0,
                complementarity: 0.0,
                method: OracleMethod::ClassicalPrimalDual,
            });
        }
    }
    Err(Error::Oracle(format!(
        "reference primal-dual residual above {tolerance:e} after {iterations} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CocoerciveOperator, ResolventOperator};
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn box_clamp() {
        let z = dvector![2.0, -0.5, 0.3];
        let sol = qp_oracle(
            &Matrix::identity(3, 3),
            &(-&z),
            &[ConvexSet::cube(3, 0.0, 1.0).unwrap()],
        )
        .unwrap();
        assert!((sol.point - dvector![1.0, 0.0, 0.3]).amax() < 1e-12);
        assert_eq!(sol.method, OracleMethod::ActiveSetEnumeration);
    }

    #[test]
    fn unconstrained_is_linear_solve() {
        let q = dmatrix![2.0, 1.0; 1.0, 3.0];
        let c = dvector![1.0, -1.0];
        let sol = qp_oracle(&q, &c, &[]).unwrap();
        let expect = -q.lu().solve(&c).unwrap();
        assert!((sol.point - expect).amax() < 1e-12);
    }

    #[test]
    fn halfspace_projection_in_metric() {
        // Minimize ½‖y − x‖²_U with U = diag(2, 1) over ⟨y, (1, 1)⟩ ≤ 1 at x = (2, 2).
        let u = dmatrix![2.0, 0.0; 0.0, 1.0];
        let x = dvector![2.0, 2.0];
        let c = -(&u * &x);
        let h = ConvexSet::half_space(dvector![1.0, 1.0], 1.0).unwrap();
        let sol = qp_oracle(&u, &c, core::slice::from_ref(&h)).unwrap();
        assert!((sol.point - dvector![1.0, 0.0]).amax() < 1e-12);
        // Inactive branch: x already feasible.
        let x = dvector![0.0, -1.0];
        let sol = qp_oracle(&u, &(-(&u * &x)), &[h]).unwrap();
        assert!((sol.point - x).amax() < 1e-12);
    }

    #[test]
    fn dual_fallback_matches_enumeration() {
        let z = dvector![3.0, -2.0, 0.5, 1.5, -0.1, 0.7, 2.2, -1.3, 0.0, 0.9, 1.1];
        let n = z.len();
        let sets = [ConvexSet::cube(n, 0.0, 1.0).unwrap()];
        let sol = qp_oracle(&Matrix::identity(n, n), &(-&z), &sets).unwrap();
        assert_eq!(sol.method, OracleMethod::DualProjectedGradient);
        let expect = z.map(|v| v.clamp(0.0, 1.0));
        assert!((sol.point - expect).amax() < 1e-9);
    }

    #[test]
    fn infeasible_constraints_fail() {
        let a = ConvexSet::half_space(dvector![1.0], -1.0).unwrap();
        let b = ConvexSet::half_space(dvector![-1.0], -1.0).unwrap();
        assert!(qp_oracle(&Matrix::identity(1, 1), &dvector![0.0], &[a, b]).is_err());
    }

    #[test]
    fn scalar_examples() {
        assert!((scalar_prox_oracle(&ScalarFunction::abs(), 1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(scalar_prox_oracle(&ScalarFunction::abs(), 1.0, 0.5).unwrap(), 0.0);
        assert_eq!(
            scalar_prox_oracle(&ScalarFunction::upper_indicator(0.0), 1.0, 5.0).unwrap(),
            0.0
        );
        let q = ScalarFunction::quadratic(1.0, 0.0).unwrap();
        assert!((scalar_prox_oracle(&q, 3.0, 4.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_identity_fixture_in_one_step() {
        let c = dvector![1.0, -2.0];
        let p = FbProblem::new(
            ResolventOperator::zero(2),
            CocoerciveOperator::shifted_identity(c.clone()),
        )
        .unwrap();
        let sol = reference_fb(&p, 1.0, &Vector::zeros(2), 5, 1e-12).unwrap();
        assert!((sol.point - c).amax() < 1e-15);
        let it = classical_fb_iterates(&p, 1.0, &Vector::zeros(2), 1).unwrap();
        assert_eq!(it[1], dvector![1.0, -2.0]);
    }

    #[test]
    fn reference_pd_reaches_kkt_point() {
        use crate::cocoercive::{kkt_residual, CocoerciveProblem};
        use crate::strong::DualBlock;
        let p = CocoerciveProblem::new(
            dvector![1.0, 2.0],
            ResolventOperator::zero(2),
            CocoerciveOperator::shifted_identity(Vector::zeros(2)),
            vec![DualBlock::new(
                crate::linalg::LinearMap::identity(2),
                ResolventOperator::normal_cone(ConvexSet::cube(2, 0.0, 1.0).unwrap()),
                CocoerciveOperator::zero(2),
                Vector::zeros(2),
            )
            .unwrap()],
        )
        .unwrap();
        let sol = reference_pd(&p, 0.4, &[0.4], 100_000, 1e-13).unwrap();
        assert!((sol.point.rows(0, 2) - dvector![1.0, 1.0]).amax() < 1e-10);
        let x = sol.point.rows(0, 2).into_owned();
        let v = sol.point.rows(2, 2).into_owned();
        assert!(kkt_residual(&p, &x, &[v]).unwrap() < 1e-10);
    }
}

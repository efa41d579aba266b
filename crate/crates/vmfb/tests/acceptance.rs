//! Acceptance criteria, one line of output each.

// NaN must fail every bound check, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fmt::Display;
use std::panic::catch_unwind;
use std::process::{Command, Output};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vmfb_core::cocoercive::{
    admissible_scalar_step, kkt_residual, product_metric_matrix, solve_cocoercive_pd, CocoerciveProblem, PdErrors,
    ProductPoint, Relaxation,
};
use vmfb_core::fb::{b_drift_diagnostic, fb_solve, fejer_diagnostic, FbProblem, SolveOptions, StoppingRule};
use vmfb_core::linalg::{min_eigenvalue, spectral_norm, LinearMap, Matrix, Metric, Vector};
use vmfb_core::operators::{
    cocoercive_sum, prox_metric, resolvent_conjugated, resolvent_inverse_identity, resolvent_metric,
    CocoerciveOperator, ConvexSet, Modulus, ProxFunction, ResolventOperator, ScalarFunction,
};
use vmfb_core::oracles::{classical_fb_iterates, classical_pd_iterates, qp_oracle, reference_fb, scalar_prox_oracle};
use vmfb_core::schedules::{
    delta_zeta, validate_corollary62, ErrorSchedule, ErrorSequence, MetricSchedule, ScalarSequence, StepSchedule,
};
use vmfb_core::strong::{
    beta_dual, primal_recovery, solve_best_approximation, solve_strong_duality, solve_strongly_convex_min, stack,
    BestApproximationProblem, ConvexBlock, DualBlock, DualErrors, SmoothingTerm, StronglyConvexProblem,
    StronglyMonotoneProblem,
};
use vmfb_core::Error;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

trait Ctx<T> {
    fn ctx(self, what: &str) -> Result<T, String>;
}

impl<T, E: Display> Ctx<T> for Result<T, E> {
    fn ctx(self, what: &str) -> Result<T, String> {
        self.map_err(|e| format!("{what}: {e}"))
    }
}

fn rel_gap(a: &Vector, b: &Vector) -> f64 {
    (a - b).amax() / (1.0 + b.amax())
}

fn svd_norm(m: &Matrix) -> f64 {
    m.clone().singular_values().max()
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("resolvent calculus identities", resolvent_paths),
        ("closed-form prox correctness", closed_form_prox),
        ("cocoercive composition constant", cocoercive_composition),
        ("variable-metric forward-backward convergence", fb_convergence),
        ("inexact forward-backward", fb_inexact),
        ("strongly monotone dual method", strong_duality),
        ("best approximation", best_approximation),
        ("primal-dual method for cocoercive problems", cocoercive_pd),
        ("fixed-metric regression", fixed_metric_regression),
        ("negative controls", negative_controls),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS {name} [{secs:.2} s] {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}: FAIL {name} [{secs:.2} s] {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

// 1

fn resolvent_paths() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(1);
    let mut worst = 0.0_f64;
    for trial in 0..100 {
        let n = rng.random_range(2..=20);
        let a = common::catalog_operator(&mut rng, n, trial);
        let u = common::spd(&mut rng, n, 0.2, 5.0);
        let gamma = 10f64.powf(rng.random_range(-1.0..1.0));
        let x = common::vector(&mut rng, n, 3.0);
        let direct = resolvent_metric(&a, gamma, &u, &x).ctx("direct resolvent")?;
        let conj = resolvent_conjugated(&a, gamma, &u, &x).ctx("conjugated resolvent")?;
        let inv = resolvent_inverse_identity(&a, gamma, &u, &x).ctx("inverse-identity resolvent")?;
        let gap = rel_gap(&direct, &conj)
            .max(rel_gap(&direct, &inv))
            .max(rel_gap(&conj, &inv));
        ensure!(
            gap <= 1e-9,
            "trial {trial} ({}, n = {n}): paths differ by {gap:e}",
            a.descriptor()
        );
        worst = worst.max(gap);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2} s");
    Ok(format!(
        "100 triples in dims 2-20, worst pairwise gap {worst:.2e}, {secs:.2} s"
    ))
}

// 2

fn nonzero(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = common::vector(rng, n, 1.0);
        if v.norm() > 0.2 {
            return v;
        }
    }
}

fn closed_form_prox() -> Outcome {
    let mut rng = common::rng(2);
    let mut worst = [0.0_f64; 4];

    for i in 0..50 {
        let n = rng.random_range(1..=8);
        let u = common::spd(&mut rng, n, 0.2, 5.0);
        let dir = nonzero(&mut rng, n);
        let phi = match i % 3 {
            0 => ScalarFunction::abs(),
            1 => ScalarFunction::upper_indicator(rng.random_range(-1.0..1.0)),
            _ => ScalarFunction::quadratic(rng.random_range(0.1..3.0), rng.random_range(-1.0..1.0)).ctx("quadratic")?,
        };
        let x = common::vector(&mut rng, n, 3.0);
        let f = ProxFunction::scalar_composite(phi.clone(), dir.clone()).ctx("composite")?;
        let p = prox_metric(&f, 1.0, &u, &x).ctx("prox")?;
        let ud = u.apply_inverse(&dir);
        let w = dir.dot(&ud);
        let s = scalar_prox_oracle(&phi, w, x.dot(&dir)).ctx("scalar oracle")?;
        let expect = &x + &ud * ((s - x.dot(&dir)) / w);
        worst[0] = worst[0].max((p - expect).amax());
    }

    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let u = common::spd(&mut rng, n, 0.2, 5.0);
        let h = ConvexSet::half_space(nonzero(&mut rng, n), rng.random_range(-1.0..1.0)).ctx("half-space")?;
        let x = common::vector(&mut rng, n, 3.0);
        let p = prox_metric(&ProxFunction::Indicator(h.clone()), 1.0, &u, &x).ctx("prox")?;
        let q = qp_oracle(u.matrix(), &-u.apply(&x), &[h]).ctx("qp oracle")?;
        worst[1] = worst[1].max((p - q.point).amax());
    }

    for _ in 0..50 {
        let n = rng.random_range(1..=10);
        let u = common::spd(&mut rng, n, 0.2, 5.0);
        let a = common::spd_matrix(&mut rng, n, 0.0, 3.0);
        let lin = common::vector(&mut rng, n, 1.0);
        let x = common::vector(&mut rng, n, 3.0);
        let f = ProxFunction::quadratic(a.clone(), lin.clone()).ctx("quadratic")?;
        let p = prox_metric(&f, 1.0, &u, &x).ctx("prox")?;
        let q = qp_oracle(&(&a + u.matrix()), &(&lin - u.apply(&x)), &[]).ctx("qp oracle")?;
        worst[2] = worst[2].max((p - q.point).amax());
    }

    for _ in 0..50 {
        let n = rng.random_range(1..=8);
        let u = common::spd(&mut rng, n, 0.2, 5.0);
        let m = rng.random_range(1..=3);
        let terms: Vec<(f64, Matrix, Vector)> = (0..m)
            .map(|_| {
                let k = rng.random_range(1..=4);
                (
                    rng.random_range(0.1..2.0),
                    common::matrix(&mut rng, k, n),
                    common::vector(&mut rng, k, 1.0),
                )
            })
            .collect();
        let x = common::vector(&mut rng, n, 3.0);
        let f = ProxFunction::least_squares(&terms).ctx("least squares")?;
        let p = prox_metric(&f, 1.0, &u, &x).ctx("prox")?;
        let mut q = u.matrix().clone();
        let mut c = -u.apply(&x);
        for (w, l, r) in &terms {
            q += l.transpose() * l * *w;
            c -= l.transpose() * r * *w;
        }
        let o = qp_oracle(&q, &c, &[]).ctx("qp oracle")?;
        worst[3] = worst[3].max((p - o.point).amax());
    }

    let labels = ["scalar composite", "half-space", "quadratic", "least squares"];
    for (label, w) in labels.iter().zip(worst) {
        ensure!(w <= 1e-8, "{label}: max error {w:e}");
    }
    Ok(format!(
        "4 x 50 instances, max errors {:.1e} / {:.1e} / {:.1e} / {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

// 3

fn cocoercive_composition() -> Outcome {
    let mut rng = common::rng(3);
    let mut min_margin = f64::INFINITY;
    for inst in 0..20 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=3);
        let mut terms = Vec::new();
        let mut expected_inv = 0.0;
        for j in 0..m {
            let k = rng.random_range(1..=4);
            let l = common::matrix(&mut rng, k, n);
            let op = match (inst + j) % 3 {
                0 => CocoerciveOperator::gradient_of_quadratic(
                    common::spd_matrix(&mut rng, k, 0.1, 3.0),
                    common::vector(&mut rng, k, 1.0),
                )
                .ctx("quadratic gradient")?,
                1 => CocoerciveOperator::shifted_identity(common::vector(&mut rng, k, 1.0)),
                _ => {
                    let s = common::matrix(&mut rng, k, k);
                    let mm = common::spd_matrix(&mut rng, k, 0.5, 2.0) + (&s - s.transpose()) * 0.5;
                    CocoerciveOperator::affine(mm, common::vector(&mut rng, k, 1.0)).ctx("affine")?
                }
            };
            let nl = svd_norm(&l);
            expected_inv += nl * nl / op.beta().value();
            terms.push((LinearMap::new(l).ctx("coupling")?, op));
        }
        let t = cocoercive_sum(&terms).ctx("sum")?;
        let beta = t.beta().value();
        let expected = 1.0 / expected_inv;
        ensure!(
            (beta - expected).abs() <= 1e-10 * expected,
            "instance {inst}: constant {beta:e}, expected {expected:e}"
        );
        let mut violations = 0;
        for _ in 0..10_000 {
            let x = common::vector(&mut rng, n, 3.0);
            let y = common::vector(&mut rng, n, 3.0);
            let d = t.apply(&x).ctx("apply")? - t.apply(&y).ctx("apply")?;
            let margin = (&x - &y).dot(&d) - beta * d.norm_squared();
            min_margin = min_margin.min(margin);
            if margin < -1e-9 {
                violations += 1;
            }
        }
        ensure!(violations == 0, "instance {inst}: {violations} violations");
    }
    Ok(format!(
        "20 composites x 10^4 pairs, no violations, smallest margin {min_margin:.2e}"
    ))
}

// 4, 5, 9

struct FbFixture {
    name: String,
    /// The resolvent of `A` has a closed form only under diagonal metrics.
    diagonal: bool,
    problem: FbProblem,
    x0: Vector,
    solution: Vector,
}

fn reference_step(problem: &FbProblem) -> f64 {
    match problem.b.beta() {
        Modulus::Finite(b) => b,
        Modulus::Infinite => 1.0,
    }
}

fn fb_fixtures() -> Result<Vec<FbFixture>, String> {
    let mut rng = common::rng(4);
    let mut out = Vec::new();

    let projections: [(usize, &str); 4] = [(3, "half-space"), (5, "box"), (8, "affine"), (12, "ball")];
    for (n, kind) in projections {
        let z = common::vector(&mut rng, n, 3.0);
        let (set, solution) = match kind {
            "half-space" => {
                let h = ConvexSet::half_space(nonzero(&mut rng, n), 0.5).ctx("set")?;
                let s = qp_oracle(&Matrix::identity(n, n), &-&z, core::slice::from_ref(&h))
                    .ctx("qp oracle")?
                    .point;
                (h, s)
            }
            "box" => {
                let lo = Vector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
                let hi = Vector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
                let b = ConvexSet::boxed(lo, hi).ctx("set")?;
                let s = qp_oracle(&Matrix::identity(n, n), &-&z, core::slice::from_ref(&b))
                    .ctx("qp oracle")?
                    .point;
                (b, s)
            }
            "affine" => {
                let a = common::matrix(&mut rng, 3, n);
                let rhs = common::vector(&mut rng, 3, 1.0);
                let c = ConvexSet::affine(a, rhs).ctx("set")?;
                let s = qp_oracle(&Matrix::identity(n, n), &-&z, std::slice::from_ref(&c))
                    .ctx("qp oracle")?
                    .point;
                (c, s)
            }
            _ => {
                let center = common::vector(&mut rng, n, 0.5);
                let d = &z - &center;
                let s = if d.norm() > 1.0 {
                    &center + &d / d.norm()
                } else {
                    z.clone()
                };
                (ConvexSet::ball(center, 1.0).ctx("set")?, s)
            }
        };
        let problem = FbProblem::new(
            ResolventOperator::normal_cone(set),
            CocoerciveOperator::shifted_identity(z),
        )
        .ctx("problem")?;
        out.push(FbFixture {
            name: format!("projection onto {kind} (n = {n})"),
            diagonal: kind == "box",
            problem,
            x0: Vector::zeros(n),
            solution,
        });
    }

    for seed in 0..3 {
        let m = common::matrix(&mut rng, 15, 10);
        let b = common::vector(&mut rng, 15, 2.0);
        let weight = rng.random_range(0.2..1.0);
        let grad =
            CocoerciveOperator::gradient_of_quadratic(m.transpose() * &m, -(m.transpose() * b)).ctx("gradient")?;
        let problem = FbProblem::new(
            ResolventOperator::subdifferential(ProxFunction::l1(10, weight).ctx("l1")?),
            grad,
        )
        .ctx("problem")?;
        let x0 = Vector::zeros(10);
        let solution = reference_fb(&problem, reference_step(&problem), &x0, 1_000_000, 1e-13)
            .ctx("reference")?
            .point;
        out.push(FbFixture {
            name: format!("lasso dim 10 #{seed}"),
            diagonal: true,
            problem,
            x0,
            solution,
        });
    }

    for seed in 0..3 {
        let s = common::matrix(&mut rng, 5, 5);
        let mm = common::spd_matrix(&mut rng, 5, 0.5, 2.0) + (&s - s.transpose()) * 0.5;
        let b = CocoerciveOperator::affine(mm, common::vector(&mut rng, 5, 3.0)).ctx("affine")?;
        let problem = FbProblem::new(
            ResolventOperator::normal_cone(ConvexSet::cube(5, -1.0, 1.0).ctx("cube")?),
            b,
        )
        .ctx("problem")?;
        let x0 = common::vector(&mut rng, 5, 1.0);
        let solution = reference_fb(&problem, reference_step(&problem), &x0, 1_000_000, 1e-13)
            .ctx("reference")?
            .point;
        out.push(FbFixture {
            name: format!("box VI dim 5 #{seed}"),
            diagonal: true,
            problem,
            x0,
            solution,
        });
    }
    Ok(out)
}

fn variable_metric(rng: &mut ChaCha8Rng, n: usize, increasing: bool, diagonal: bool) -> Result<MetricSchedule, String> {
    let (base, d) = if diagonal {
        let d = Matrix::from_diagonal(&Vector::from_fn(n, |_, _| rng.random_range(0.1..1.0)));
        (common::diagonal_metric(rng, n, 0.5, 1.5), d)
    } else {
        (common::spd(rng, n, 0.5, 1.5), common::spd_matrix(rng, n, 0.1, 1.0))
    };
    let amplitude = 0.3 * base.min_eigenvalue() / spectral_norm(&d);
    let amplitude = if increasing { -amplitude } else { amplitude };
    MetricSchedule::perturbed(base, d, amplitude, 0.9).ctx("metric schedule")
}

fn fb_convergence() -> Outcome {
    let fixtures = fb_fixtures()?;
    let mut rng = common::rng(40);
    let (mut worst_dist, mut worst_fejer, mut worst_drift, mut max_iter) = (0.0_f64, f64::NEG_INFINITY, 0.0_f64, 0);
    for (i, f) in fixtures.iter().enumerate() {
        let n = f.problem.dim();
        let ms = variable_metric(&mut rng, n, i % 2 == 0, f.diagonal)?;
        let ss = StepSchedule::default_for(f.problem.b.beta(), ms.mu_bound());
        let es = ErrorSchedule::zero(n);
        let opts = SolveOptions::new(StoppingRule::new(1e-8, 100_000)).with_reference(f.solution.clone());
        let (x, trace) = fb_solve(&f.problem, &ms, &ss, &es, &f.x0, &opts).ctx(&f.name)?;
        ensure!(
            trace.converged(),
            "{}: {} after {} iterations",
            f.name,
            trace.termination.as_str(),
            trace.iterations()
        );
        ensure!(
            trace.final_residual() <= 1e-8,
            "{}: residual {:e}",
            f.name,
            trace.final_residual()
        );
        let dist = (&x - &f.solution).norm();
        ensure!(dist <= 1e-6, "{}: distance to oracle {dist:e}", f.name);
        let fejer = trace.max_fejer_violation().unwrap_or(f64::NEG_INFINITY);
        ensure!(fejer <= 1e-9, "{}: quasi-Fejér violated by {fejer:e}", f.name);
        let recheck = fejer_diagnostic(&trace, &f.solution, &ms, &ss, &es, f.problem.b.beta(), 1e-9).ctx("Fejér")?;
        ensure!(
            recheck.holds(1e-9),
            "{}: recomputed Fejér gap {:e} at n = {:?}",
            f.name,
            recheck.max_violation,
            recheck.first_violation
        );
        let drift = b_drift_diagnostic(&trace, &f.solution, &f.problem.b).ctx("drift")?;
        let share = if drift.total > 0.0 {
            drift.last_quarter_increment / drift.total
        } else {
            0.0
        };
        ensure!(
            drift.plateaued(0.01),
            "{}: last quarter adds {:.3}% of the drift sum",
            f.name,
            100.0 * share
        );
        worst_dist = worst_dist.max(dist);
        worst_fejer = worst_fejer.max(fejer);
        worst_drift = worst_drift.max(share);
        max_iter = max_iter.max(trace.iterations());
    }
    Ok(format!(
        "{} fixtures, at most {max_iter} iterations, distance to oracle <= {worst_dist:.1e}, \
         Fejér gap <= {worst_fejer:.1e}, last-quarter drift share <= {:.2e}%",
        fixtures.len(),
        100.0 * worst_drift
    ))
}

fn fb_inexact() -> Outcome {
    let fixtures = fb_fixtures()?;
    let mut rng = common::rng(50);
    let mut worst = 0.0_f64;
    for (i, f) in fixtures.iter().enumerate() {
        let n = f.problem.dim();
        let ms = variable_metric(&mut rng, n, i % 2 == 1, f.diagonal)?;
        let ss = StepSchedule::default_for(f.problem.b.beta(), ms.mu_bound());
        let es = ErrorSchedule {
            a: ErrorSequence::geometric(nonzero(&mut rng, n), 1.0, 0.5).ctx("errors")?,
            b: ErrorSequence::geometric(nonzero(&mut rng, n), 1.0, 0.7).ctx("errors")?,
        };
        ensure!(es.norm_budget() == (1.0, 1.0), "error budget {:?}", es.norm_budget());
        let opts = SolveOptions::new(StoppingRule::new(1e-8, 100_000)).without_iterates();
        let (x, trace) = fb_solve(&f.problem, &ms, &ss, &es, &f.x0, &opts).ctx(&f.name)?;
        ensure!(
            trace.converged(),
            "{}: {} after {} iterations",
            f.name,
            trace.termination.as_str(),
            trace.iterations()
        );
        let dist = (&x - &f.solution).norm();
        ensure!(dist <= 1e-5, "{}: distance to oracle {dist:e}", f.name);
        worst = worst.max(dist);
    }
    Ok(format!(
        "{} fixtures with unit error budgets, distance to oracle <= {worst:.1e}",
        fixtures.len()
    ))
}

// 6

struct StrongFixture {
    problem: StronglyConvexProblem,
    solution: Vector,
}

fn half_spaces_of_box(l: &Matrix, r: &Vector, lo: f64, hi: f64) -> Result<Vec<ConvexSet>, String> {
    // lo <= L_j x - r_j <= hi
    let mut out = Vec::new();
    for j in 0..l.nrows() {
        let row = l.row(j).transpose();
        out.push(ConvexSet::half_space(row.clone(), hi + r[j]).ctx("half-space")?);
        out.push(ConvexSet::half_space(-row, -(lo + r[j])).ctx("half-space")?);
    }
    Ok(out)
}

fn strong_fixtures() -> Result<Vec<StrongFixture>, String> {
    let mut rng = common::rng(6);
    let mut out = Vec::new();
    for n in [3, 4, 5, 6, 8] {
        let z = common::vector(&mut rng, n, 3.0);
        let l1 = common::matrix(&mut rng, 2, n);
        let r1 = common::vector(&mut rng, 2, 0.2);
        let a = rng.random_range(0.3..0.8);
        let k2 = rng.random_range(1..=3);
        let l2 = common::matrix(&mut rng, k2, n);
        let r2 = common::vector(&mut rng, k2, 1.0);
        let nu = rng.random_range(0.5..2.0);
        let problem = StronglyConvexProblem {
            z: z.clone(),
            f: ProxFunction::Indicator(ConvexSet::cube(n, -1.0, 1.0).ctx("cube")?),
            blocks: vec![
                ConvexBlock {
                    g: ProxFunction::Indicator(ConvexSet::cube(2, -a, a).ctx("cube")?),
                    smoothing: SmoothingTerm::ZeroIndicator,
                    l: LinearMap::new(l1.clone()).ctx("L1")?,
                    r: r1.clone(),
                },
                ConvexBlock {
                    g: ProxFunction::Indicator(ConvexSet::Singleton(Vector::zeros(k2))),
                    smoothing: SmoothingTerm::Quadratic { nu },
                    l: LinearMap::new(l2.clone()).ctx("L2")?,
                    r: r2.clone(),
                },
            ],
        };
        // ½‖x − z‖² + (ν/2)‖L₂x − r₂‖² over the cube with −a ≤ L₁x − r₁ ≤ a
        let q = Matrix::identity(n, n) + l2.transpose() * &l2 * nu;
        let c = -&z - l2.transpose() * &r2 * nu;
        let mut sets = vec![ConvexSet::cube(n, -1.0, 1.0).ctx("cube")?];
        sets.extend(half_spaces_of_box(&l1, &r1, -a, a)?);
        let solution = qp_oracle(&q, &c, &sets).ctx("qp oracle")?.point;
        out.push(StrongFixture { problem, solution });
    }
    Ok(out)
}

fn strong_duality() -> Outcome {
    let fixtures = strong_fixtures()?;
    let mut rng = common::rng(60);
    let (mut worst_x, mut worst_rec, mut worst_path) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (i, f) in fixtures.iter().enumerate() {
        let p = f.problem.to_inclusion().ctx("inclusion")?;
        let dims = p.dual_dims();
        let n = p.primal_dim();
        let dms: Vec<MetricSchedule> = dims
            .iter()
            .map(|&k| variable_metric(&mut rng, k, i % 2 == 0, true))
            .collect::<Result<_, _>>()?;
        let block = MetricSchedule::block_diagonal(dms.clone()).ctx("block metric")?;
        let ss = StepSchedule::default_for(Modulus::Finite(beta_dual(&p)), block.mu_bound());
        let errors = DualErrors::zero(n, &dims);
        let v_zero: Vec<Vector> = dims.iter().map(|&k| Vector::zeros(k)).collect();

        let opts = SolveOptions::new(StoppingRule::new(1e-12, 100_000)).without_iterates();
        let sol = solve_strongly_convex_min(&f.problem, &dms, &ss, &errors, &v_zero, &opts).ctx("solve")?;
        let dx = (&sol.x - &f.solution).norm();
        ensure!(dx <= 1e-6, "fixture {i}: primal distance to oracle {dx:e}");
        let rec = (primal_recovery(&p, &sol.v).ctx("recovery")? - &f.solution).norm();
        ensure!(rec <= 1e-8, "fixture {i}: recovered primal off by {rec:e}");

        let v0: Vec<Vector> = dims.iter().map(|&k| common::vector(&mut rng, k, 1.0)).collect();
        let fixed = SolveOptions::new(StoppingRule::fixed(500));
        let structured = solve_strong_duality(&p, &dms, &ss, &errors, &v0, &fixed).ctx("structured")?;
        let (_, product) = fb_solve(
            &p.dual_product_problem().ctx("product problem")?,
            &block,
            &ss,
            &ErrorSchedule::zero(p.dual_dim()),
            &stack(&v0),
            &fixed,
        )
        .ctx("product space")?;
        ensure!(
            structured.trace.records.len() == product.records.len(),
            "fixture {i}: trace lengths differ"
        );
        for (a, b) in structured.trace.records.iter().zip(&product.records) {
            let gap = rel_gap(&a.x, &b.x);
            ensure!(
                gap <= 1e-12,
                "fixture {i}: dual sequences differ by {gap:e} at n = {}",
                a.n
            );
            worst_path = worst_path.max(gap);
        }
        worst_x = worst_x.max(dx);
        worst_rec = worst_rec.max(rec);
    }
    Ok(format!(
        "5 fixtures, primal distance <= {worst_x:.1e}, recovery <= {worst_rec:.1e}, \
         structured vs product space <= {worst_path:.1e}"
    ))
}

// 7

fn best_approximation() -> Outcome {
    let mut rng = common::rng(7);
    let mut worst = 0.0_f64;
    for n in [2, 4, 6, 8, 10] {
        let z = common::vector(&mut rng, n, 3.0);
        let c = if n <= 6 {
            ConvexSet::cube(n, -1.0, 1.0).ctx("cube")?
        } else {
            ConvexSet::Whole(n)
        };
        let l1 = common::matrix(&mut rng, 2, n);
        let r1 = common::vector(&mut rng, 2, 0.3);
        let normal = nonzero(&mut rng, 2);
        let offset = normal.dot(&r1).abs() + 0.1;
        let k2 = rng.random_range(1..=2);
        let l2 = common::matrix(&mut rng, k2, n);
        let r2 = common::vector(&mut rng, k2, 0.1);
        let problem = BestApproximationProblem {
            z: z.clone(),
            c: c.clone(),
            constraints: vec![
                (
                    ConvexSet::half_space(normal.clone(), offset).ctx("set")?,
                    LinearMap::new(l1.clone()).ctx("L1")?,
                    r1.clone(),
                ),
                (
                    ConvexSet::cube(k2, -0.5, 0.5).ctx("set")?,
                    LinearMap::new(l2.clone()).ctx("L2")?,
                    r2.clone(),
                ),
            ],
        };
        let sum_l2 = svd_norm(&l1).powi(2) + svd_norm(&l2).powi(2);

        // (max_i sup_n ‖U_{i,n}‖) Σ‖L_i‖² = 1.5
        let sigma = 1.5 / sum_l2;
        let dms = vec![
            MetricSchedule::constant(Metric::scalar(2, sigma).ctx("metric")?),
            MetricSchedule::perturbed(
                Metric::scalar(k2, sigma / 1.2).ctx("metric")?,
                Matrix::identity(k2, k2),
                -0.2 * sigma / 1.2,
                0.8,
            )
            .ctx("metric")?,
        ];
        let errors = DualErrors::zero(n, &[2, k2]);
        let v0 = vec![Vector::zeros(2), Vector::zeros(k2)];
        let opts = SolveOptions::new(StoppingRule::new(1e-12, 100_000)).without_iterates();
        let sol = solve_best_approximation(&problem, &dms, &errors, &v0, &opts).ctx("solve")?;

        let mut sets = vec![c];
        sets.push(ConvexSet::half_space(l1.transpose() * &normal, offset + normal.dot(&r1)).ctx("set")?);
        sets.extend(half_spaces_of_box(&l2, &r2, -0.5, 0.5)?);
        let oracle = qp_oracle(&Matrix::identity(n, n), &-&z, &sets).ctx("qp oracle")?;
        let d = (&sol.x - &oracle.point).amax();
        ensure!(d <= 1e-6, "n = {n}: projection differs from the QP oracle by {d:e}");
        worst = worst.max(d);

        let too_large = vec![
            MetricSchedule::constant(Metric::scalar(2, 2.5 / sum_l2).ctx("metric")?),
            MetricSchedule::constant(Metric::scalar(k2, 2.5 / sum_l2).ctx("metric")?),
        ];
        let refused = solve_best_approximation(&problem, &too_large, &errors, &v0, &opts);
        ensure!(
            matches!(refused, Err(Error::ValidationFailed(_))),
            "n = {n}: step-norm condition not enforced"
        );
    }
    Ok(format!(
        "5 fixtures in dims 2-10, max deviation from the QP oracle {worst:.1e}, oversized metrics refused"
    ))
}

// 8, 9

fn unit_norm_map(m: Matrix, scale: f64) -> Result<LinearMap, String> {
    let l = LinearMap::new(m).ctx("coupling")?;
    Ok(l.scaled(scale / l.norm()))
}

fn cocoercive_fixture(seed: u64) -> Result<CocoerciveProblem, String> {
    let mut rng = common::rng(800 + seed);
    let n = 3 + seed as usize;
    let c = CocoerciveOperator::gradient_of_quadratic(
        common::spd_matrix(&mut rng, n, 0.2, 1.0),
        common::vector(&mut rng, n, 1.0),
    )
    .ctx("C")?;
    let a = if seed.is_multiple_of(2) {
        ResolventOperator::normal_cone(ConvexSet::half_space(nonzero(&mut rng, n), 0.5).ctx("set")?)
    } else {
        ResolventOperator::subdifferential(ProxFunction::l1(n, 0.3).ctx("l1")?)
    };
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let b1 = DualBlock::new(
        unit_norm_map(common::matrix(&mut rng, 3, n), scale)?,
        ResolventOperator::normal_cone(ConvexSet::ball(Vector::zeros(3), 0.7).ctx("set")?),
        CocoerciveOperator::affine(Matrix::identity(3, 3), Vector::zeros(3)).ctx("D1")?,
        common::vector(&mut rng, 3, 1.0),
    )
    .ctx("block")?;
    let b2 = DualBlock::new(
        unit_norm_map(common::matrix(&mut rng, 2, n), scale)?,
        ResolventOperator::subdifferential(
            ProxFunction::scalar_composite(ScalarFunction::abs(), nonzero(&mut rng, 2)).ctx("composite")?,
        ),
        CocoerciveOperator::zero(2),
        common::vector(&mut rng, 2, 1.0),
    )
    .ctx("block")?;
    CocoerciveProblem::new(common::vector(&mut rng, n, 1.0), a, c, vec![b1, b2]).ctx("problem")
}

fn growing(rng: &mut ChaCha8Rng, n: usize, base: f64, diagonal: bool) -> Result<MetricSchedule, String> {
    let d = if diagonal {
        Matrix::from_diagonal(&Vector::from_fn(n, |_, _| rng.random_range(0.0..1.0)))
    } else {
        common::spd_matrix(rng, n, 0.0, 1.0)
    };
    MetricSchedule::perturbed(Metric::scalar(n, base).ctx("metric")?, d, -0.1 * base, 0.8).ctx("metric")
}

fn cocoercive_pd() -> Outcome {
    let mut rng = common::rng(8);

    let mut worst_delta = 0.0_f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(1..=6);
        let l = common::matrix(&mut rng, k, n);
        let tau: f64 = rng.random_range(0.05..2.0);
        let sigma: f64 = rng.random_range(0.05..2.0);
        let expected = 1.0 / ((sigma * tau).sqrt() * svd_norm(&l)) - 1.0;
        let u = Metric::scalar(n, tau).ctx("metric")?;
        let ui = Metric::scalar(k, sigma).ctx("metric")?;
        let ls = [LinearMap::new(l).ctx("L")?];
        let (delta, _) = delta_zeta(&u, std::slice::from_ref(&ui), &ls).ctx("delta")?;
        let report = validate_corollary62(
            &MetricSchedule::constant(u),
            &[MetricSchedule::constant(ui)],
            &ls,
            Modulus::Finite(1.0),
            0.5,
            3,
        )
        .ctx("validator")?;
        let err = (delta - expected).abs().max((report.delta[0] - expected).abs()) / expected.abs().max(1.0);
        ensure!(err <= 1e-12, "δ = {delta:e}, closed form {expected:e}");
        worst_delta = worst_delta.max(err);
    }

    let (mut worst_kkt, mut samples) = (0.0_f64, 0);
    for seed in 0..5 {
        let p = cocoercive_fixture(seed)?;
        // the l1 prox of odd fixtures needs a diagonal primal metric
        let ms = growing(&mut rng, p.primal_dim(), 0.3, seed % 2 == 1)?;
        let dms: Vec<MetricSchedule> = p
            .dual_dims()
            .iter()
            .map(|&k| growing(&mut rng, k, 0.3, false))
            .collect::<Result<_, _>>()?;
        let relax = Relaxation::default_for(p.beta());
        let opts = SolveOptions::new(StoppingRule::new(1e-11, 100_000)).without_iterates();
        let sol = solve_cocoercive_pd(
            &p,
            &ms,
            &dms,
            &relax,
            &PdErrors::zero(&p),
            &ProductPoint::zeros(&p),
            &opts,
        )
        .ctx("solve")?;
        let kkt = kkt_residual(&p, &sol.x, &sol.v).ctx("kkt")?;
        ensure!(
            kkt <= 1e-7,
            "fixture {seed}: KKT residual {kkt:e} ({})",
            sol.trace.termination.as_str()
        );
        worst_kkt = worst_kkt.max(kkt);

        let ls = p.couplings();
        let horizon = 25;
        let mut checks = Vec::with_capacity(horizon);
        for n in 0..horizon {
            let u = ms.metric(n).ctx("metric")?;
            let us: Vec<Metric> = dms
                .iter()
                .map(|d| d.metric(n))
                .collect::<Result<_, _>>()
                .ctx("metric")?;
            let v = product_metric_matrix(&u, &us, &ls).ctx("product metric")?;
            let (_, zeta) = delta_zeta(&u, &us, &ls).ctx("zeta")?;
            ensure!(zeta > 0.0, "fixture {seed}: ζ_{n} = {zeta:e}");
            ensure!(
                (&v - v.transpose()).amax() == 0.0,
                "fixture {seed}: V_{n} not symmetric"
            );
            let lo = min_eigenvalue(&v).ctx("eigenvalues")?;
            ensure!(
                lo >= zeta * (1.0 - 1e-12),
                "fixture {seed}: λ_min(V_{n}) = {lo:e} < ζ = {zeta:e}"
            );
            checks.push((v, zeta));
        }
        for s in 0..1000 {
            let (v, zeta) = &checks[s % horizon];
            let x = common::vector(&mut rng, p.product_dim(), 1.0);
            let q = x.dot(&(v * &x));
            ensure!(
                q >= zeta * x.norm_squared() * (1.0 - 1e-12),
                "fixture {seed}: ⟨x, Vx⟩ = {q:e} below ζ‖x‖²"
            );
            samples += 1;
        }
    }
    Ok(format!(
        "δ closed form within {worst_delta:.1e} on 20 cases, KKT residual <= {worst_kkt:.1e} on 5 fixtures, \
         {samples} product-metric samples above ζ‖x‖²"
    ))
}

fn fixed_metric_regression() -> Outcome {
    let mut worst_fb = 0.0_f64;
    for f in fb_fixtures()?.iter().skip(3) {
        let n = f.problem.dim();
        let beta = reference_step(&f.problem);
        let ss = StepSchedule::new(
            0.5 * beta.min(1.0),
            ScalarSequence::Constant(beta),
            ScalarSequence::Constant(1.0),
        )
        .ctx("steps")?;
        let ms = MetricSchedule::constant(Metric::identity(n));
        let (_, trace) = fb_solve(
            &f.problem,
            &ms,
            &ss,
            &ErrorSchedule::zero(n),
            &f.x0,
            &SolveOptions::new(StoppingRule::fixed(1000)),
        )
        .ctx(&f.name)?;
        let classical = classical_fb_iterates(&f.problem, beta, &f.x0, 1000).ctx("classical")?;
        ensure!(
            trace.records.len() == classical.len(),
            "{}: {} records vs {}",
            f.name,
            trace.records.len(),
            classical.len()
        );
        for (r, c) in trace.records.iter().zip(&classical) {
            let gap = rel_gap(&r.x, c);
            ensure!(gap <= 1e-12, "{}: gap {gap:e} at n = {}", f.name, r.n);
            worst_fb = worst_fb.max(gap);
        }
    }

    let mut rng = common::rng(9);
    let mut worst_pd = 0.0_f64;
    for seed in 0..3 {
        let p = cocoercive_fixture(seed)?;
        let s = admissible_scalar_step(&p);
        let sigma = vec![s; p.blocks.len()];
        let lambda = 0.9;
        let relax = Relaxation {
            epsilon: 0.5 * p.beta().value().min(1.0),
            lambda: ScalarSequence::Constant(lambda),
        };
        let ms = MetricSchedule::constant(Metric::scalar(p.primal_dim(), s).ctx("metric")?);
        let dms: Vec<MetricSchedule> = p
            .dual_dims()
            .iter()
            .map(|&k| Metric::scalar(k, s).map(MetricSchedule::constant))
            .collect::<Result<_, _>>()
            .ctx("metric")?;
        let x0 = common::vector(&mut rng, p.primal_dim(), 1.0);
        let v0: Vec<Vector> = p
            .dual_dims()
            .iter()
            .map(|&k| common::vector(&mut rng, k, 1.0))
            .collect();
        let start = ProductPoint::new(&p, x0.clone(), v0.clone()).ctx("start")?;
        let sol = solve_cocoercive_pd(
            &p,
            &ms,
            &dms,
            &relax,
            &PdErrors::zero(&p),
            &start,
            &SolveOptions::new(StoppingRule::fixed(1000)),
        )
        .ctx("solve")?;
        let classical = classical_pd_iterates(&p, s, &sigma, lambda, &x0, &v0, 1000).ctx("classical")?;
        ensure!(
            sol.trace.records.len() == classical.len(),
            "fixture {seed}: {} records vs {}",
            sol.trace.records.len(),
            classical.len()
        );
        for (r, (x, v)) in sol.trace.records.iter().zip(&classical) {
            let mut parts = vec![x.clone()];
            parts.extend(v.iter().cloned());
            let gap = rel_gap(&r.x, &stack(&parts));
            ensure!(gap <= 1e-12, "fixture {seed}: gap {gap:e} at n = {}", r.n);
            worst_pd = worst_pd.max(gap);
        }
    }
    Ok(format!(
        "forward-backward vs classical loop <= {worst_fb:.1e} over 10^3 steps on 6 fixtures, \
         primal-dual vs fixed-metric loop <= {worst_pd:.1e} on 3 fixtures"
    ))
}

// 10

fn vmfb(args: &[&str]) -> Result<Output, String> {
    Command::new(env!("CARGO_BIN_EXE_vmfb"))
        .args(args)
        .output()
        .ctx("running vmfb")
}

fn negative_controls() -> Outcome {
    // Disk touching a half-plane at the origin: C ∩ K = {0} and z has a nonzero
    // second coordinate, so the primal inclusion has no solution.
    let p = StronglyMonotoneProblem::new(
        Vector::from_vec(vec![0.5, 1.0]),
        1.0,
        ResolventOperator::normal_cone(ConvexSet::ball(Vector::from_vec(vec![1.0, 0.0]), 1.0).ctx("disk")?),
        vec![DualBlock::new(
            LinearMap::identity(2),
            ResolventOperator::normal_cone(
                ConvexSet::half_space(Vector::from_vec(vec![1.0, 0.0]), 0.0).ctx("half-plane")?,
            ),
            CocoerciveOperator::zero(2),
            Vector::zeros(2),
        )
        .ctx("block")?],
    )
    .ctx("problem")?;
    let dms = vec![MetricSchedule::constant(Metric::identity(2))];
    let ss = StepSchedule::default_for(Modulus::Finite(beta_dual(&p)), 1.0);
    let opts = SolveOptions::new(StoppingRule::new(1e-8, 20_000)).without_iterates();
    let sol =
        solve_strong_duality(&p, &dms, &ss, &DualErrors::zero(2, &[2]), &[Vector::zeros(2)], &opts).ctx("solve")?;
    ensure!(!sol.trace.converged(), "the infeasible problem converged");
    let residual = sol.trace.final_residual();
    ensure!(residual > 1e-8, "final residual {residual:e}");

    let dir = tempfile::tempdir().ctx("tempdir")?;
    let out = dir.path().join("infeasible");
    let run = vmfb(&[
        "run",
        "--config",
        "infeasible_best_approximation",
        "--out-dir",
        out.to_str().unwrap(),
    ])?;
    ensure!(run.status.code() != Some(0), "bundled infeasible fixture exited 0");
    let summary = std::fs::read_to_string(out.join("summary.toml")).ctx("summary")?;
    ensure!(
        summary.contains("converged = false"),
        "bundled infeasible fixture reports convergence"
    );

    let out = dir.path().join("gamma");
    let run = vmfb(&[
        "run",
        "--strict",
        "--config",
        "gamma_out_of_range",
        "--out-dir",
        out.to_str().unwrap(),
    ])?;
    ensure!(
        run.status.code() == Some(2),
        "out-of-range γ exited with {:?}",
        run.status.code()
    );
    ensure!(!out.join("trace.csv").exists(), "out-of-range γ wrote a trace");

    let u = Metric::scalar(2, 1.0).ctx("metric")?;
    let l = LinearMap::new(Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]))).ctx("L")?;
    let report = validate_corollary62(
        &MetricSchedule::constant(u.clone()),
        &[MetricSchedule::constant(u)],
        &[l],
        Modulus::Finite(1.0),
        0.5,
        3,
    )
    .ctx("validator")?;
    ensure!(report.delta[0] <= 0.0, "δ = {:e}", report.delta[0]);
    ensure!(
        report
            .report
            .failures()
            .any(|c| c.detail.contains("infeasible scaling")),
        "validator did not report infeasible scaling"
    );
    let run = vmfb(&["validate", "--config", "infeasible_scaling"])?;
    let stdout = String::from_utf8_lossy(&run.stdout);
    ensure!(
        run.status.code() == Some(2),
        "validate exited with {:?}",
        run.status.code()
    );
    ensure!(
        stdout.contains("infeasible scaling"),
        "validate output lacks the infeasible-scaling message"
    );

    Ok(format!(
        "infeasible fixture stalls at residual {residual:.1e}, out-of-range γ refused with exit 2, \
         δ = {:.2} reported as infeasible scaling",
        report.delta[0]
    ))
}

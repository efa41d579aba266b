#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmfb_core::linalg::{Matrix, Metric, Vector};
use vmfb_core::operators::{ConvexSet, ProxFunction, ResolventOperator, ScalarFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random orthogonal matrix from the QR factor of a uniform matrix.
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    matrix(rng, n, n).qr().q()
}

/// SPD matrix with spectrum drawn uniformly from `[lo, hi]`.
pub fn spd_matrix(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Matrix {
    let q = orthogonal(rng, n);
    let d = Matrix::from_diagonal(&Vector::from_fn(n, |_, _| rng.random_range(lo..=hi)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Metric {
    Metric::from_matrix(spd_matrix(rng, n, lo, hi)).expect("spectrum bounded away from zero")
}

pub fn diagonal_metric(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Metric {
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    Metric::diagonal(&d).expect("positive diagonal")
}

fn nonzero_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = vector(rng, n, 1.0);
        if v.norm() > 0.2 {
            return v;
        }
    }
}

/// A catalog operator whose congruences and inverse stay in the catalog, so every
/// resolvent path is available under a dense metric.
pub fn catalog_operator(rng: &mut ChaCha8Rng, n: usize, kind: usize) -> ResolventOperator {
    match kind % 9 {
        0 => ResolventOperator::subdifferential(
            ProxFunction::quadratic(spd_matrix(rng, n, 0.1, 3.0), vector(rng, n, 1.0)).unwrap(),
        ),
        1 => ResolventOperator::normal_cone(
            ConvexSet::half_space(nonzero_vector(rng, n), rng.random_range(-1.0..1.0)).unwrap(),
        ),
        2 => {
            let k = 1 + rng.random_range(0..n.max(2) - 1);
            let a = matrix(rng, k.min(n), n);
            let rhs = &a * vector(rng, n, 1.0);
            ResolventOperator::normal_cone(ConvexSet::affine(a, rhs).unwrap())
        }
        3 => ResolventOperator::normal_cone(ConvexSet::ball(vector(rng, n, 1.0), rng.random_range(0.3..2.0)).unwrap()),
        4 => ResolventOperator::subdifferential(ProxFunction::Support(
            ConvexSet::ball(vector(rng, n, 0.5), rng.random_range(0.3..2.0)).unwrap(),
        )),
        5 => ResolventOperator::subdifferential(
            ProxFunction::scalar_composite(ScalarFunction::abs(), nonzero_vector(rng, n)).unwrap(),
        ),
        6 => ResolventOperator::subdifferential(
            ProxFunction::scalar_composite(
                ScalarFunction::upper_indicator(rng.random_range(-1.0..1.0)),
                nonzero_vector(rng, n),
            )
            .unwrap(),
        ),
        7 => {
            let s = matrix(rng, n, n);
            let skew = &s - s.transpose();
            let m = spd_matrix(rng, n, 0.0, 2.0) + skew;
            ResolventOperator::affine(m, vector(rng, n, 1.0)).unwrap()
        }
        _ => ResolventOperator::subdifferential(ProxFunction::Support(
            ConvexSet::half_space(nonzero_vector(rng, n), rng.random_range(0.0..1.0)).unwrap(),
        )),
    }
}

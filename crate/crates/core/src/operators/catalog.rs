//! Closed-form proximity operators and projections under a general metric.
//!
//! Every entry computes `prox^W_{γf}(x) = argmin_y γ f(y) + ½‖y − x‖²_W` exactly
//! (up to rounding) without inner iterations. The catalog is closed under
//! conjugation and under composition with a symmetric positive-definite map
//! whenever the result stays representable; otherwise the corresponding
//! operation reports [`Error::OutsideCatalog`].

use alloc::format;
use alloc::string::String;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{invert, solve, symmetric_eigen, Matrix, Metric, Vector};

/// Relative tolerance used when deciding membership in a set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A proper lower semicontinuous convex function `ℝ → ]−∞, +∞]`.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFunction {
    /// `t ↦ lo_slope·(t − center)` for `t < center` and `hi_slope·(t − center)` for `t ≥ center`.
    /// An infinite slope turns the corresponding side into `+∞`.
    Hinge { center: f64, lo_slope: f64, hi_slope: f64 },
    /// `t ↦ slope·t` on `[lo, hi]` and `+∞` elsewhere; bounds may be infinite.
    LinearOnInterval { slope: f64, lo: f64, hi: f64 },
    /// `t ↦ ½ a t² + b t` with `a ≥ 0`.
    Quadratic { a: f64, b: f64 },
}

impl ScalarFunction {
    /// `|·|`.
    pub fn abs() -> Self {
        Self::Hinge {
            center: 0.0,
            lo_slope: -1.0,
            hi_slope: 1.0,
        }
    }

    /// Indicator of `]−∞, xi]`.
    pub fn upper_indicator(xi: f64) -> Self {
        Self::Hinge {
            center: xi,
            lo_slope: 0.0,
            hi_slope: f64::INFINITY,
        }
    }

    /// `½ a t² + b t`.
    pub fn quadratic(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scalar quadratic needs finite a >= 0 and finite b, got a = {a}, b = {b}"
            )));
        }
        Ok(Self::Quadratic { a, b })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Hinge {
                center,
                lo_slope,
                hi_slope,
            } => {
                if !center.is_finite()
                    || lo_slope == f64::INFINITY
                    || hi_slope == f64::NEG_INFINITY
                    || lo_slope.is_nan()
                    || hi_slope.is_nan()
                    || lo_slope > hi_slope
                {
                    return Err(Error::InvalidParameter(format!(
                        "hinge needs finite center and lo_slope <= hi_slope, got {self:?}"
                    )));
                }
            }
            Self::LinearOnInterval { slope, lo, hi } => {
                if !slope.is_finite()
                    || lo == f64::INFINITY
                    || hi == f64::NEG_INFINITY
                    || lo.is_nan()
                    || hi.is_nan()
                    || lo > hi
                {
                    return Err(Error::InvalidParameter(format!(
                        "linear-on-interval needs finite slope and lo <= hi, got {self:?}"
                    )));
                }
            }
            Self::Quadratic { a, b } => {
                Self::quadratic(a, b)?;
            }
        }
        Ok(())
    }

    /// `prox_{wφ}(t) = argmin_s w φ(s) + ½(s − t)²` for `w > 0`.
    pub fn prox(&self, w: f64, t: f64) -> f64 {
        match *self {
            Self::Hinge {
                center,
                lo_slope,
                hi_slope,
            } => {
                let d = t - center;
                if hi_slope.is_finite() && d > w * hi_slope {
                    t - w * hi_slope
                } else if lo_slope.is_finite() && d < w * lo_slope {
                    t - w * lo_slope
                } else {
                    center
                }
            }
            Self::LinearOnInterval { slope, lo, hi } => (t - w * slope).clamp(lo, hi),
            Self::Quadratic { a, b } => (t - w * b) / (1.0 + w * a),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Hinge {
                center,
                lo_slope,
                hi_slope,
            } => {
                let d = t - center;
                let tol = MEMBERSHIP_TOL * (1.0 + center.abs());
                if d > tol {
                    if hi_slope.is_finite() {
                        hi_slope * d
                    } else {
                        f64::INFINITY
                    }
                } else if d < -tol {
                    if lo_slope.is_finite() {
                        lo_slope * d
                    } else {
                        f64::INFINITY
                    }
                } else if d > 0.0 && hi_slope.is_finite() {
                    hi_slope * d
                } else if d < 0.0 && lo_slope.is_finite() {
                    lo_slope * d
                } else {
                    0.0
                }
            }
            Self::LinearOnInterval { slope, lo, hi } => {
                let tol = MEMBERSHIP_TOL * (1.0 + t.abs());
                if t < lo - tol || t > hi + tol {
                    f64::INFINITY
                } else {
                    slope * t
                }
            }
            Self::Quadratic { a, b } => 0.5 * a * t * t + b * t,
        }
    }

    /// Legendre conjugate. Exact, except that additive constants of quadratics are dropped.
    pub fn conjugate(&self) -> ScalarFunction {
        match *self {
            Self::Hinge {
                center,
                lo_slope,
                hi_slope,
            } => Self::LinearOnInterval {
                slope: center,
                lo: lo_slope,
                hi: hi_slope,
            },
            Self::LinearOnInterval { slope, lo, hi } => Self::Hinge {
                center: slope,
                lo_slope: lo,
                hi_slope: hi,
            },
            Self::Quadratic { a, b } => {
                if a > 0.0 {
                    Self::Quadratic { a: 1.0 / a, b: -b / a }
                } else {
                    Self::LinearOnInterval {
                        slope: 0.0,
                        lo: b,
                        hi: b,
                    }
                }
            }
        }
    }
}

/// A nonempty closed convex subset of `ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    /// `{x : ⟨x, normal⟩ ≤ offset}` with `normal ≠ 0`.
    HalfSpace { normal: Vector, offset: f64 },
    /// `{x : lower ≤ x ≤ upper}` componentwise; bounds may be infinite.
    Box { lower: Vector, upper: Vector },
    /// `{x : Mx = b}` with `M` of full row rank.
    Affine { matrix: Matrix, rhs: Vector },
    /// `{x : ‖Q(x − c)‖ ≤ r}` with `Q` invertible.
    Ellipsoid { shape: Matrix, center: Vector, radius: f64 },
    /// `{c}`.
    Singleton(Vector),
    /// The whole space `ℝⁿ`.
    Whole(usize),
}

impl ConvexSet {
    pub fn half_space(normal: Vector, offset: f64) -> Result<Self> {
        if normal.iter().all(|v| *v == 0.0) || !offset.is_finite() {
            return Err(Error::InvalidParameter(
                "half-space needs a nonzero normal and a finite offset".into(),
            ));
        }
        Ok(Self::HalfSpace { normal, offset })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u) || l.is_nan()) {
            return Err(Error::InvalidParameter("box needs lower <= upper".into()));
        }
        Ok(Self::Box { lower, upper })
    }

    /// `[lo, hi]ⁿ`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(Vector::from_element(dim, lo), Vector::from_element(dim, hi))
    }

    pub fn affine(matrix: Matrix, rhs: Vector) -> Result<Self> {
        check_dim("affine set", matrix.nrows(), rhs.len())?;
        let gram = &matrix * matrix.transpose();
        invert(&gram).map_err(|_| Error::InvalidParameter("affine set needs a matrix of full row rank".into()))?;
        Ok(Self::Affine { matrix, rhs })
    }

    pub fn ellipsoid(shape: Matrix, center: Vector, radius: f64) -> Result<Self> {
        check_dim("ellipsoid", shape.ncols(), center.len())?;
        check_dim("ellipsoid", shape.nrows(), center.len())?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ellipsoid radius must be positive, got {radius}"
            )));
        }
        invert(&shape).map_err(|_| Error::InvalidParameter("ellipsoid shape must be invertible".into()))?;
        Ok(Self::Ellipsoid { shape, center, radius })
    }

    /// Euclidean ball.
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        let n = center.len();
        Self::ellipsoid(Matrix::identity(n, n), center, radius)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::HalfSpace { normal, .. } => normal.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::Affine { matrix, .. } => matrix.ncols(),
            Self::Ellipsoid { center, .. } => center.len(),
            Self::Singleton(c) => c.len(),
            Self::Whole(n) => *n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HalfSpace { .. } => "half-space",
            Self::Box { .. } => "box",
            Self::Affine { .. } => "affine subspace",
            Self::Ellipsoid { .. } => "ellipsoid",
            Self::Singleton(_) => "singleton",
            Self::Whole(_) => "whole space",
        }
    }

    /// Membership up to [`MEMBERSHIP_TOL`] relative to the size of `x`.
    pub fn contains(&self, x: &Vector) -> bool {
        let scale = 1.0 + x.amax();
        let tol = MEMBERSHIP_TOL * scale;
        match self {
            Self::HalfSpace { normal, offset } => {
                x.dot(normal) <= offset + tol * (normal.amax() + 1.0) * x.len() as f64
            }
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Self::Affine { matrix, rhs } => (matrix * x - rhs).amax() <= tol * (1.0 + matrix.amax()) * x.len() as f64,
            Self::Ellipsoid { shape, center, radius } => {
                (shape * (x - center)).norm() <= radius + tol * (1.0 + shape.amax())
            }
            Self::Singleton(c) => (x - c).amax() <= tol,
            Self::Whole(_) => true,
        }
    }

    /// `P_C^W(x) = argmin_{y ∈ C} ‖y − x‖_W`.
    pub fn project(&self, w: &Metric, x: &Vector) -> Result<Vector> {
        check_dim("projection", self.dim(), x.len())?;
        check_dim("projection metric", self.dim(), w.dim())?;
        match self {
            Self::HalfSpace { normal, offset } => {
                let t = x.dot(normal);
                if t <= *offset {
                    return Ok(x.clone());
                }
                let winv_u = w.apply_inverse(normal);
                let s = normal.dot(&winv_u);
                Ok(x + winv_u * ((offset - t) / s))
            }
            Self::Box { lower, upper } => {
                if !w.is_diagonal() {
                    return Err(Error::OutsideCatalog("box projection needs a diagonal metric".into()));
                }
                Ok(Vector::from_iterator(
                    x.len(),
                    x.iter()
                        .zip(lower.iter().zip(upper.iter()))
                        .map(|(v, (l, u))| v.clamp(*l, *u)),
                ))
            }
            Self::Affine { matrix, rhs } => {
                let resid = matrix * x - rhs;
                let winv_mt = w.inverse_matrix() * matrix.transpose();
                let gram = matrix * &winv_mt;
                let lam = solve(&gram, &resid)?;
                Ok(x - winv_mt * lam)
            }
            Self::Ellipsoid { shape, center, radius } => project_ellipsoid(w, shape, center, *radius, x),
            Self::Singleton(c) => Ok(c.clone()),
            Self::Whole(_) => Ok(x.clone()),
        }
    }

    /// Support function `σ_C(y) = sup_{x ∈ C} ⟨x, y⟩`, possibly `+∞`.
    pub fn support(&self, y: &Vector) -> f64 {
        let tol = MEMBERSHIP_TOL * (1.0 + y.amax());
        match self {
            Self::HalfSpace { normal, offset } => {
                let t = y.dot(normal) / normal.norm_squared();
                if t >= -tol && (y - normal * t).amax() <= tol {
                    t.max(0.0) * offset
                } else {
                    f64::INFINITY
                }
            }
            Self::Box { lower, upper } => {
                let mut s = 0.0;
                for ((v, l), u) in y.iter().zip(lower.iter()).zip(upper.iter()) {
                    if *v > 0.0 {
                        s += v * u;
                    } else if *v < 0.0 {
                        s += v * l;
                    }
                }
                if s.is_nan() {
                    f64::INFINITY
                } else {
                    s
                }
            }
            Self::Affine { matrix, rhs } => {
                let gram = matrix * matrix.transpose();
                match solve(&gram, &(matrix * y)) {
                    Ok(lam) if (matrix.tr_mul(&lam) - y).amax() <= tol => lam.dot(rhs),
                    _ => f64::INFINITY,
                }
            }
            Self::Ellipsoid { shape, center, radius } => match solve(&shape.transpose(), y) {
                Ok(z) => center.dot(y) + radius * z.norm(),
                Err(_) => f64::INFINITY,
            },
            Self::Singleton(c) => c.dot(y),
            Self::Whole(_) => {
                if y.amax() <= tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// The image `T(C)` under an invertible symmetric map `T` given as a metric.
    pub fn linear_image(&self, t: &Metric) -> Result<ConvexSet> {
        check_dim("linear image", self.dim(), t.dim())?;
        Ok(match self {
            Self::HalfSpace { normal, offset } => Self::HalfSpace {
                normal: t.apply_inverse(normal),
                offset: *offset,
            },
            Self::Box { lower, upper } => {
                let d = t
                    .diagonal_entries()
                    .ok_or_else(|| Error::OutsideCatalog("image of a box under a non-diagonal map".into()))?;
                Self::Box {
                    lower: lower.component_mul(&d),
                    upper: upper.component_mul(&d),
                }
            }
            Self::Affine { matrix, rhs } => Self::Affine {
                matrix: matrix * t.inverse_matrix(),
                rhs: rhs.clone(),
            },
            Self::Ellipsoid { shape, center, radius } => Self::Ellipsoid {
                shape: shape * t.inverse_matrix(),
                center: t.apply(center),
                radius: *radius,
            },
            Self::Singleton(c) => Self::Singleton(t.apply(c)),
            Self::Whole(n) => Self::Whole(*n),
        })
    }
}

/// Projection onto `{y : ‖Q(y − c)‖ ≤ r}` in the metric `W`.
///
/// The multiplier `μ ≥ 0` of the constraint solves the scalar secular equation
/// `Σ_k λ_k g_k² / (1 + μλ_k)² = r²` in the eigenbasis of `W^{-1/2} QᵀQ W^{-1/2}`,
/// which is monotone in `μ` and solved by bisection to full precision.
fn project_ellipsoid(w: &Metric, shape: &Matrix, center: &Vector, radius: f64, x: &Vector) -> Result<Vector> {
    let d0 = x - center;
    if (shape * &d0).norm() <= radius {
        return Ok(x.clone());
    }
    let k = shape.transpose() * shape;
    let m = w.inv_sqrt_matrix() * &k * w.inv_sqrt_matrix();
    let m = (&m + m.transpose()) * 0.5;
    let (lam, vecs) = symmetric_eigen(&m);
    let g = vecs.tr_mul(&w.apply_sqrt(&d0));
    let r2 = radius * radius;
    let excess = |mu: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..lam.len() {
            let l = lam[i].max(0.0);
            let den = 1.0 + mu * l;
            s += l * g[i] * g[i] / (den * den);
        }
        s - r2
    };
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut guard = 0;
    while excess(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Factorization("ellipsoid multiplier bracket"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = hi;
    let e = Vector::from_iterator(lam.len(), (0..lam.len()).map(|i| g[i] / (1.0 + mu * lam[i].max(0.0))));
    let d = w.apply_inv_sqrt(&(&vecs * e));
    Ok(center + d)
}

/// A function with a closed-form metric proximity operator.
#[derive(Clone, Debug, PartialEq)]
pub enum ProxFunction {
    /// The zero function on `ℝⁿ`.
    Zero(usize),
    /// `ι_C`.
    Indicator(ConvexSet),
    /// `σ_C`.
    Support(ConvexSet),
    /// `x ↦ ½⟨Ax, x⟩ + ⟨u, x⟩` with `A` symmetric positive semidefinite.
    Quadratic { a: Matrix, u: Vector },
    /// `x ↦ φ(⟨x, u⟩)` with `u ≠ 0`.
    ScalarComposite { phi: ScalarFunction, u: Vector },
    /// `y ↦ ψ(t)` if `y = t·u`, `+∞` otherwise, with `u ≠ 0`.
    ScalarOnLine { psi: ScalarFunction, u: Vector },
}

impl ProxFunction {
    /// `Σ_i weight·|x_i|`, realized as the support function of `[−weight, weight]ⁿ`.
    pub fn l1(dim: usize, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "l1 weight must be finite and >= 0, got {weight}"
            )));
        }
        Ok(Self::Support(ConvexSet::cube(dim, -weight, weight)?))
    }

    /// `Σ_i w_i |x_i|`.
    pub fn weighted_l1(weights: &Vector) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("l1 weights must be finite and >= 0".into()));
        }
        Ok(Self::Support(ConvexSet::boxed(-weights.clone(), weights.clone())?))
    }

    /// `½⟨Ax, x⟩ + ⟨u, x⟩`.
    pub fn quadratic(a: Matrix, u: Vector) -> Result<Self> {
        check_dim("quadratic", a.nrows(), u.len())?;
        let a = crate::linalg::symmetrize(&a)?;
        let lo = crate::linalg::min_eigenvalue(&a)?;
        if lo < -1e-12 * (1.0 + a.amax()) {
            return Err(Error::InvalidParameter(format!(
                "quadratic needs a positive semidefinite matrix, smallest eigenvalue {lo:e}"
            )));
        }
        Ok(Self::Quadratic { a, u })
    }

    /// `½ Σ_k ω_k ‖L_k x − r_k‖²` up to an additive constant.
    pub fn least_squares(terms: &[(f64, Matrix, Vector)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|t| t.1.ncols())
            .ok_or_else(|| Error::InvalidParameter("least squares needs a term".into()))?;
        let mut a = Matrix::zeros(n, n);
        let mut u = Vector::zeros(n);
        for (w, l, r) in terms {
            check_dim("least squares term", n, l.ncols())?;
            check_dim("least squares term", l.nrows(), r.len())?;
            a += l.transpose() * l * *w;
            u -= l.tr_mul(r) * *w;
        }
        Self::quadratic(a, u)
    }

    pub fn scalar_composite(phi: ScalarFunction, u: Vector) -> Result<Self> {
        phi.validate()?;
        if u.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidParameter("scalar composite needs u != 0".into()));
        }
        Ok(Self::ScalarComposite { phi, u })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Zero(n) => *n,
            Self::Indicator(c) | Self::Support(c) => c.dim(),
            Self::Quadratic { u, .. } => u.len(),
            Self::ScalarComposite { u, .. } | Self::ScalarOnLine { u, .. } => u.len(),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::Zero(_) => "zero".into(),
            Self::Indicator(c) => format!("indicator of {}", c.name()),
            Self::Support(c) => format!("support function of {}", c.name()),
            Self::Quadratic { .. } => "quadratic".into(),
            Self::ScalarComposite { phi, .. } => format!("scalar composite {phi:?}"),
            Self::ScalarOnLine { psi, .. } => format!("scalar on a line {psi:?}"),
        }
    }

    /// `prox^W_{γf}(x) = argmin_y γ f(y) + ½‖y − x‖²_W`.
    pub fn prox(&self, gamma: f64, w: &Metric, x: &Vector) -> Result<Vector> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
        }
        check_dim("prox argument", self.dim(), x.len())?;
        check_dim("prox metric", self.dim(), w.dim())?;
        match self {
            Self::Zero(_) => Ok(x.clone()),
            Self::Indicator(c) => c.project(w, x),
            Self::Support(c) => {
                let winv = w.inverse();
                let inner = c.project(&winv, &(w.apply(x) / gamma))?;
                Ok(x - w.apply_inverse(&inner) * gamma)
            }
            Self::Quadratic { a, u } => {
                let lhs = w.matrix() + a * gamma;
                let rhs = w.apply(x) - u * gamma;
                solve(&lhs, &rhs)
            }
            Self::ScalarComposite { phi, u } => {
                let winv_u = w.apply_inverse(u);
                let s = u.dot(&winv_u);
                let t0 = x.dot(u);
                let t = phi.prox(gamma * s, t0);
                Ok(x + winv_u * ((t - t0) / s))
            }
            Self::ScalarOnLine { psi, u } => {
                let wu = w.apply(u);
                let s = u.dot(&wu);
                let t = psi.prox(gamma / s, x.dot(&wu) / s);
                Ok(u * t)
            }
        }
    }

    /// Function value, `+∞` outside the domain.
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            Self::Zero(_) => 0.0,
            Self::Indicator(c) => {
                if c.contains(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Support(c) => c.support(x),
            Self::Quadratic { a, u } => 0.5 * x.dot(&(a * x)) + u.dot(x),
            Self::ScalarComposite { phi, u } => phi.value(x.dot(u)),
            Self::ScalarOnLine { psi, u } => {
                let t = x.dot(u) / u.norm_squared();
                if (x - u * t).amax() <= MEMBERSHIP_TOL * (1.0 + x.amax()) {
                    psi.value(t)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Legendre conjugate `f*`. Exact except that additive constants of quadratics are dropped.
    pub fn conjugate(&self) -> Result<ProxFunction> {
        Ok(match self {
            Self::Zero(n) => Self::Indicator(ConvexSet::Singleton(Vector::zeros(*n))),
            Self::Indicator(c) => Self::Support(c.clone()),
            Self::Support(c) => Self::Indicator(c.clone()),
            Self::Quadratic { a, u } => {
                if a.iter().all(|v| *v == 0.0) {
                    Self::Indicator(ConvexSet::Singleton(u.clone()))
                } else {
                    let m = Metric::from_matrix(a.clone()).map_err(|_| {
                        Error::MissingInverse(
                            "quadratic with a singular nonzero matrix (conjugate leaves the catalog)".into(),
                        )
                    })?;
                    Self::Quadratic {
                        a: m.inverse_matrix().clone(),
                        u: -m.apply_inverse(u),
                    }
                }
            }
            Self::ScalarComposite { phi, u } => Self::ScalarOnLine {
                psi: phi.conjugate(),
                u: u.clone(),
            },
            Self::ScalarOnLine { psi, u } => Self::ScalarComposite {
                phi: psi.conjugate(),
                u: u.clone(),
            },
        })
    }

    /// `f ∘ S` for a symmetric positive-definite `S`.
    pub fn compose_spd(&self, s: &Metric) -> Result<ProxFunction> {
        check_dim("composition", self.dim(), s.dim())?;
        Ok(match self {
            Self::Zero(n) => Self::Zero(*n),
            Self::Indicator(c) => Self::Indicator(c.linear_image(&s.inverse())?),
            Self::Support(c) => Self::Support(c.linear_image(s)?),
            Self::Quadratic { a, u } => {
                let sas = s.matrix() * a * s.matrix();
                Self::Quadratic {
                    a: (&sas + sas.transpose()) * 0.5,
                    u: s.apply(u),
                }
            }
            Self::ScalarComposite { phi, u } => Self::ScalarComposite {
                phi: phi.clone(),
                u: s.apply(u),
            },
            Self::ScalarOnLine { psi, u } => Self::ScalarOnLine {
                psi: psi.clone(),
                u: s.apply_inverse(u),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn scalar_prox_examples() {
        assert_eq!(ScalarFunction::abs().prox(1.0, 2.0), 1.0);
        assert_eq!(ScalarFunction::abs().prox(1.0, -0.5), 0.0);
        assert_eq!(ScalarFunction::upper_indicator(0.0).prox(3.0, 5.0), 0.0);
        assert_eq!(ScalarFunction::upper_indicator(0.0).prox(3.0, -5.0), -5.0);
        assert_eq!(ScalarFunction::Quadratic { a: 1.0, b: 0.0 }.prox(3.0, 4.0), 1.0);
    }

    #[test]
    fn scalar_conjugate_roundtrip() {
        for f in [
            ScalarFunction::abs(),
            ScalarFunction::upper_indicator(1.5),
            ScalarFunction::Quadratic { a: 2.0, b: -1.0 },
        ] {
            assert_eq!(f.conjugate().conjugate(), f);
        }
    }

    #[test]
    fn halfspace_prox_example() {
        let w = Metric::diagonal(&[2.0, 1.0]).unwrap();
        let c = ConvexSet::half_space(dvector![1.0, 1.0], 1.0).unwrap();
        let p = c.project(&w, &dvector![2.0, 2.0]).unwrap();
        assert!((p - dvector![1.0, 0.0]).amax() < 1e-15);
    }

    #[test]
    fn box_projection_diagonal() {
        let w = Metric::diagonal(&[1.0, 5.0]).unwrap();
        let c = ConvexSet::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(c.project(&w, &dvector![2.0, -1.0]).unwrap(), dvector![1.0, 0.0]);
        let nd = Metric::from_matrix(dmatrix![2.0, 0.5; 0.5, 1.0]).unwrap();
        assert!(matches!(
            c.project(&nd, &dvector![2.0, -1.0]),
            Err(Error::OutsideCatalog(_))
        ));
    }

    #[test]
    fn soft_threshold_via_support() {
        let f = ProxFunction::l1(2, 1.0).unwrap();
        let p = f.prox(1.0, &Metric::identity(2), &dvector![2.0, 0.5]).unwrap();
        assert_eq!(p, dvector![1.0, 0.0]);
        assert_eq!(f.value(&dvector![1.0, -2.0]), 3.0);
    }

    #[test]
    fn quadratic_prox_examples() {
        let x = dvector![1.0, -3.0];
        let zero = ProxFunction::quadratic(Matrix::zeros(2, 2), Vector::zeros(2)).unwrap();
        assert_eq!(zero.prox(1.0, &Metric::identity(2), &x).unwrap(), x);
        let id = ProxFunction::quadratic(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        assert!((id.prox(1.0, &Metric::identity(2), &x).unwrap() - x / 2.0).amax() < 1e-15);
    }

    #[test]
    fn ellipsoid_projection_is_feasible_and_optimal() {
        let w = Metric::from_matrix(dmatrix![3.0, 1.0; 1.0, 2.0]).unwrap();
        let c = ConvexSet::ball(dvector![1.0, 0.0], 1.0).unwrap();
        let x = dvector![4.0, 3.0];
        let p = c.project(&w, &x).unwrap();
        assert!(((&p - dvector![1.0, 0.0]).norm() - 1.0).abs() < 1e-12);
        // W(x − p) is an outward normal: parallel to p − center
        let g = w.apply(&(&x - &p));
        let n = &p - dvector![1.0, 0.0];
        assert!((g[0] * n[1] - g[1] * n[0]).abs() < 1e-10 * g.norm());
        assert!(g.dot(&n) > 0.0);
    }

    #[test]
    fn support_values() {
        let b = ConvexSet::cube(2, -1.0, 2.0).unwrap();
        assert_eq!(b.support(&dvector![1.0, -1.0]), 3.0);
        let h = ConvexSet::half_space(dvector![1.0, 0.0], 2.0).unwrap();
        assert_eq!(h.support(&dvector![3.0, 0.0]), 6.0);
        assert_eq!(h.support(&dvector![3.0, 1.0]), f64::INFINITY);
        assert_eq!(h.support(&dvector![-3.0, 0.0]), f64::INFINITY);
        let ball = ConvexSet::ball(dvector![1.0, 0.0], 2.0).unwrap();
        assert!((ball.support(&dvector![0.0, 1.0]) - 2.0).abs() < 1e-15);
    }
}

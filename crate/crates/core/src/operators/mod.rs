//! Maximally monotone operators exposed through their resolvents, cocoercive
//! operators, and the metric resolvent calculus.
//!
//! A set-valued operator `A` is never materialized; it is represented by the map
//! `(γ, U, x) ↦ J_{γUA}(x)`, the unique `p` with `U⁻¹(x − p) ∈ γAp`.

pub mod catalog;

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

pub use catalog::{ConvexSet, ProxFunction, ScalarFunction};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{loewner_geq, max_eigenvalue, solve, symmetrize, LinearMap, Matrix, Metric, Vector};

/// A maximally monotone operator known through its resolvent.
pub trait MonotoneOperator: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Names the closed form used by [`Self::resolvent`].
    fn descriptor(&self) -> String;

    /// `J_{γUA}(x)`.
    fn resolvent(&self, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector>;

    /// `A⁻¹` as another catalog operator.
    fn inverse(&self) -> Result<ResolventOperator> {
        Err(Error::MissingInverse(self.descriptor()))
    }

    /// `S A S` for a symmetric positive-definite `S`.
    fn congruence(&self, _s: &Metric) -> Result<ResolventOperator> {
        Err(Error::OutsideCatalog(format!("congruence of {}", self.descriptor())))
    }

    /// The convex function `f` when the operator is `∂f`.
    fn function(&self) -> Option<&ProxFunction> {
        None
    }
}

/// Shared handle to a maximally monotone operator.
#[derive(Clone, Debug)]
pub struct ResolventOperator(Arc<dyn MonotoneOperator>);

impl ResolventOperator {
    pub fn new(op: impl MonotoneOperator + 'static) -> Self {
        Self(Arc::new(op))
    }

    /// `∂f` for a catalog function `f`.
    pub fn subdifferential(f: ProxFunction) -> Self {
        Self::new(Subdifferential(f))
    }

    pub fn zero(dim: usize) -> Self {
        Self::subdifferential(ProxFunction::Zero(dim))
    }

    /// Normal cone `N_C = ∂ι_C`.
    pub fn normal_cone(c: ConvexSet) -> Self {
        Self::subdifferential(ProxFunction::Indicator(c))
    }

    /// `x ↦ Mx + c` with `M` monotone (positive semidefinite symmetric part).
    pub fn affine(m: Matrix, c: Vector) -> Result<Self> {
        Ok(Self::new(AffineMonotone::new(m, c)?))
    }

    /// Product operator `(x_1, …, x_k) ↦ A_1 x_1 × ⋯ × A_k x_k`.
    pub fn block_diagonal(blocks: Vec<ResolventOperator>) -> Result<Self> {
        Ok(Self::new(BlockOperator::new(blocks)?))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn descriptor(&self) -> String {
        self.0.descriptor()
    }

    pub fn resolvent(&self, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
        check_resolvent_args(self.dim(), gamma, u, x)?;
        self.0.resolvent(gamma, u, x)
    }

    pub fn inverse(&self) -> Result<ResolventOperator> {
        self.0.inverse()
    }

    /// `A⁻¹` evaluated through the resolvent of `A` alone.
    pub fn formal_inverse(&self) -> ResolventOperator {
        Self::new(FormalInverse(self.clone()))
    }

    pub fn congruence(&self, s: &Metric) -> Result<ResolventOperator> {
        check_dim("congruence", self.dim(), s.dim())?;
        self.0.congruence(s)
    }

    pub fn function(&self) -> Option<&ProxFunction> {
        self.0.function()
    }
}

fn check_resolvent_args(dim: usize, gamma: f64, u: &Metric, x: &Vector) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    check_dim("resolvent argument", dim, x.len())?;
    check_dim("resolvent metric", dim, u.dim())
}

/// `∂f` for a catalog function; `J_{γU∂f} = prox^{U⁻¹}_{γf}`.
#[derive(Clone, Debug)]
pub struct Subdifferential(pub ProxFunction);

impl MonotoneOperator for Subdifferential {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn descriptor(&self) -> String {
        format!("subdifferential of {}", self.0.descriptor())
    }

    fn resolvent(&self, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
        self.0.prox(gamma, &u.inverse(), x)
    }

    fn inverse(&self) -> Result<ResolventOperator> {
        Ok(ResolventOperator::subdifferential(self.0.conjugate()?))
    }

    fn congruence(&self, s: &Metric) -> Result<ResolventOperator> {
        Ok(ResolventOperator::subdifferential(self.0.compose_spd(s)?))
    }

    fn function(&self) -> Option<&ProxFunction> {
        Some(&self.0)
    }
}

/// `x ↦ Mx + c` with `M + Mᵀ ≽ 0`.
#[derive(Clone, Debug)]
pub struct AffineMonotone {
    m: Matrix,
    c: Vector,
}

impl AffineMonotone {
    pub fn new(m: Matrix, c: Vector) -> Result<Self> {
        check_dim("affine operator", m.nrows(), c.len())?;
        check_dim("affine operator", m.nrows(), m.ncols())?;
        let sym = (&m + m.transpose()) * 0.5;
        if !loewner_geq(&sym, &Matrix::zeros(m.nrows(), m.nrows()), 1e-12 * (1.0 + m.amax()))? {
            return Err(Error::InvalidParameter(
                "affine operator is not monotone (symmetric part not PSD)".into(),
            ));
        }
        Ok(Self { m, c })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn offset(&self) -> &Vector {
        &self.c
    }
}

impl MonotoneOperator for AffineMonotone {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn descriptor(&self) -> String {
        "affine monotone".into()
    }

    fn resolvent(&self, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
        let n = self.dim();
        let lhs = Matrix::identity(n, n) + u.matrix() * &self.m * gamma;
        let rhs = x - u.apply(&self.c) * gamma;
        solve(&lhs, &rhs)
    }

    fn inverse(&self) -> Result<ResolventOperator> {
        let inv =
            crate::linalg::invert(&self.m).map_err(|_| Error::MissingInverse("singular affine operator".into()))?;
        let c = -(&inv * &self.c);
        Ok(ResolventOperator::new(AffineMonotone::new(inv, c)?))
    }

    fn congruence(&self, s: &Metric) -> Result<ResolventOperator> {
        Ok(ResolventOperator::new(AffineMonotone {
            m: s.matrix() * &self.m * s.matrix(),
            c: s.apply(&self.c),
        }))
    }
}

/// Product of operators acting on consecutive blocks.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    blocks: Vec<ResolventOperator>,
    offsets: Vec<usize>,
}

impl BlockOperator {
    pub fn new(blocks: Vec<ResolventOperator>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("block operator needs a block".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut off = 0;
        for b in &blocks {
            offsets.push(off);
            off += b.dim();
        }
        offsets.push(off);
        Ok(Self { blocks, offsets })
    }

    pub fn blocks(&self) -> &[ResolventOperator] {
        &self.blocks
    }

    /// Start offsets of each block followed by the total dimension.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    fn diagonal_blocks(&self, u: &Metric) -> Result<Vec<Metric>> {
        let m = u.matrix();
        let scale = m.amax();
        for (k, _) in self.blocks.iter().enumerate() {
            let (s, e) = (self.offsets[k], self.offsets[k + 1]);
            for i in s..e {
                for j in 0..m.ncols() {
                    if (j < s || j >= e) && m[(i, j)].abs() > 1e-14 * scale {
                        return Err(Error::OutsideCatalog(
                            "block resolvent needs a block-diagonal metric".into(),
                        ));
                    }
                }
            }
        }
        self.blocks
            .iter()
            .enumerate()
            .map(|(k, b)| u.block(self.offsets[k], b.dim()))
            .collect()
    }
}

impl MonotoneOperator for BlockOperator {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn descriptor(&self) -> String {
        let names: Vec<String> = self.blocks.iter().map(|b| b.descriptor()).collect();
        format!("block diagonal [{}]", names.join(", "))
    }

    fn resolvent(&self, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
        let metrics = self.diagonal_blocks(u)?;
        let pairs: Vec<(ResolventOperator, Metric)> = self.blocks.iter().cloned().zip(metrics).collect();
        block_resolvent(&pairs, gamma, x)
    }

    fn inverse(&self) -> Result<ResolventOperator> {
        let inv = self.blocks.iter().map(|b| b.inverse()).collect::<Result<Vec<_>>>()?;
        ResolventOperator::block_diagonal(inv)
    }

    fn congruence(&self, s: &Metric) -> Result<ResolventOperator> {
        let metrics = self.diagonal_blocks(s)?;
        let blocks = self
            .blocks
            .iter()
            .zip(metrics.iter())
            .map(|(b, m)| b.congruence(m))
            .collect::<Result<Vec<_>>>()?;
        ResolventOperator::block_diagonal(blocks)
    }
}

/// `A⁻¹` whose resolvent is obtained from `J_{γ⁻¹U⁻¹A}` by the inverse-resolvent identity.
#[derive(Debug)]
pub struct FormalInverse(pub ResolventOperator);

impl MonotoneOperator for FormalInverse {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn descriptor(&self) -> String {
        format!("inverse of {}", self.0.descriptor())
    }

    fn resolvent(&self, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
        resolvent_of_inverse(&self.0, gamma, u, x)
    }

    fn inverse(&self) -> Result<ResolventOperator> {
        Ok(self.0.clone())
    }
}

/// `J_{γUA}(x)` computed directly from the operator's closed form.
pub fn resolvent_metric(a: &ResolventOperator, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
    a.resolvent(gamma, u, x)
}

/// `√U · J_{γ√U A √U}(√U⁻¹ x)`: the resolvent evaluated in the Euclidean metric after
/// a change of variables.
pub fn resolvent_conjugated(a: &ResolventOperator, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
    check_resolvent_args(a.dim(), gamma, u, x)?;
    let s = u.sqrt()?;
    let inner = a.congruence(&s)?;
    let y = inner.resolvent(gamma, &Metric::identity(a.dim()), &s.apply_inverse(x))?;
    Ok(s.apply(&y))
}

/// `x − γU · J_{γ⁻¹U⁻¹A⁻¹}(γ⁻¹U⁻¹x)`: the resolvent obtained from the inverse operator.
pub fn resolvent_inverse_identity(a: &ResolventOperator, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
    check_resolvent_args(a.dim(), gamma, u, x)?;
    let inv = a.inverse()?;
    let uinv = u.inverse();
    let y = inv.resolvent(1.0 / gamma, &uinv, &(u.apply_inverse(x) / gamma))?;
    Ok(x - u.apply(&y) * gamma)
}

/// `J_{γUA⁻¹}(x)` computed from `A` alone through the inverse-resolvent identity
/// `J_{γUA⁻¹} = Id − γU J_{γ⁻¹U⁻¹A}(γ⁻¹U⁻¹ ·)`.
pub fn resolvent_of_inverse(a: &ResolventOperator, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
    check_resolvent_args(a.dim(), gamma, u, x)?;
    let y = a.resolvent(1.0 / gamma, &u.inverse(), &(u.apply_inverse(x) / gamma))?;
    Ok(x - u.apply(&y) * gamma)
}

/// `prox^U_{γf}(x) = argmin_y γf(y) + ½‖y − x‖²_U`.
pub fn prox_metric(f: &ProxFunction, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
    f.prox(gamma, u, x)
}

/// Prox of `½⟨A_q ·,·⟩ + ⟨u, ·⟩` in the metric `U`: solves `(U + A_q)p = Ux − u`.
pub fn prox_quadratic_metric(aq: &Matrix, lin: &Vector, u: &Metric, x: &Vector) -> Result<Vector> {
    check_dim("quadratic prox", u.dim(), aq.nrows())?;
    check_dim("quadratic prox", u.dim(), lin.len())?;
    check_dim("quadratic prox", u.dim(), x.len())?;
    let aq = symmetrize(aq)?;
    solve(&(u.matrix() + aq), &(u.apply(x) - lin))
}

/// `P_C^U(x)`.
pub fn project_metric(c: &ConvexSet, u: &Metric, x: &Vector) -> Result<Vector> {
    c.project(u, x)
}

/// `prox^U_{γσ_C}(x) = x − γU⁻¹ P_C^{U⁻¹}(γ⁻¹Ux)`.
pub fn support_prox_metric(c: &ConvexSet, gamma: f64, u: &Metric, x: &Vector) -> Result<Vector> {
    ProxFunction::Support(c.clone()).prox(gamma, u, x)
}

/// Componentwise resolvent of a product operator under a block-diagonal metric.
pub fn block_resolvent(ops: &[(ResolventOperator, Metric)], gamma: f64, x: &Vector) -> Result<Vector> {
    let total: usize = ops.iter().map(|(a, _)| a.dim()).sum();
    check_dim("block resolvent", total, x.len())?;
    let mut out = Vector::zeros(total);
    let mut off = 0;
    for (a, u) in ops {
        check_dim("block resolvent metric", a.dim(), u.dim())?;
        let k = a.dim();
        let xi = x.rows(off, k).into_owned();
        let pi = a.resolvent(gamma, u, &xi)?;
        out.rows_mut(off, k).copy_from(&pi);
        off += k;
    }
    Ok(out)
}

/// Cocoercivity constant `β` of an operator, possibly infinite (the zero operator).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Modulus {
    Finite(f64),
    Infinite,
}

impl Modulus {
    /// `1/β`, zero for an infinite modulus.
    pub fn reciprocal(self) -> f64 {
        match self {
            Self::Finite(b) => 1.0 / b,
            Self::Infinite => 0.0,
        }
    }

    /// `β` as a float, `+∞` for an infinite modulus.
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(b) => b,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn min(self, other: Modulus) -> Modulus {
        match (self, other) {
            (Self::Infinite, o) | (o, Self::Infinite) => o,
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a.min(b)),
        }
    }

    fn from_reciprocal(r: f64) -> Modulus {
        if r == 0.0 {
            Self::Infinite
        } else {
            Self::Finite(1.0 / r)
        }
    }
}

type EvalFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// A single-valued `β`-cocoercive operator `B`:
/// `⟨x − y, Bx − By⟩ ≥ β‖Bx − By‖²`.
#[derive(Clone)]
pub struct CocoerciveOperator {
    dim: usize,
    beta: Modulus,
    eval: Arc<EvalFn>,
    affine: Option<(Matrix, Vector)>,
    descriptor: String,
}

impl fmt::Debug for CocoerciveOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CocoerciveOperator")
            .field("dim", &self.dim)
            .field("beta", &self.beta)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl CocoerciveOperator {
    /// Wraps an arbitrary map with a caller-certified constant.
    pub fn custom(
        dim: usize,
        beta: Modulus,
        descriptor: impl Into<String>,
        eval: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Result<Self> {
        check_modulus(beta)?;
        Ok(Self {
            dim,
            beta,
            eval: Arc::new(eval),
            affine: None,
            descriptor: descriptor.into(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self::affine_unchecked(Matrix::zeros(dim, dim), Vector::zeros(dim), Modulus::Infinite, "zero")
    }

    /// `x ↦ x − c`, the gradient of `½‖x − c‖²`, with `β = 1`.
    pub fn shifted_identity(c: Vector) -> Self {
        let n = c.len();
        Self::affine_unchecked(Matrix::identity(n, n), -c, Modulus::Finite(1.0), "x - c")
    }

    /// `x ↦ Qx + c` with `Q` symmetric PSD, the gradient of `½⟨Qx,x⟩ + ⟨c,x⟩`; `β = 1/λ_max(Q)`.
    pub fn gradient_of_quadratic(q: Matrix, c: Vector) -> Result<Self> {
        check_dim("quadratic gradient", q.nrows(), c.len())?;
        let q = symmetrize(&q)?;
        let lmin = crate::linalg::min_eigenvalue(&q)?;
        if lmin < -1e-12 * (1.0 + q.amax()) {
            return Err(Error::InvalidParameter(
                "gradient of a non-convex quadratic is not cocoercive".into(),
            ));
        }
        let lmax = max_eigenvalue(&q)?;
        let beta = if lmax <= 0.0 {
            Modulus::Infinite
        } else {
            Modulus::Finite(1.0 / lmax)
        };
        Ok(Self::affine_unchecked(q, c, beta, "quadratic gradient"))
    }

    /// `x ↦ Mx + c` with the largest `β` such that `sym(M) − βMᵀM ≽ 0`.
    pub fn affine(m: Matrix, c: Vector) -> Result<Self> {
        check_dim("affine cocoercive", m.nrows(), c.len())?;
        check_dim("affine cocoercive", m.nrows(), m.ncols())?;
        let beta = best_affine_modulus(&m)?;
        Ok(Self::affine_unchecked(m, c, beta, "affine"))
    }

    /// `x ↦ Mx + c` with a declared `β`, verified by `sym(M) − βMᵀM ≽ 0`.
    pub fn affine_with_beta(m: Matrix, c: Vector, beta: f64) -> Result<Self> {
        check_dim("affine cocoercive", m.nrows(), c.len())?;
        let b = Modulus::Finite(beta);
        check_modulus(b)?;
        if !affine_is_cocoercive(&m, beta)? {
            return Err(Error::InvalidParameter(format!("affine map is not {beta}-cocoercive")));
        }
        Ok(Self::affine_unchecked(m, c, b, "affine"))
    }

    fn affine_unchecked(m: Matrix, c: Vector, beta: Modulus, descriptor: &str) -> Self {
        let (mm, cc) = (m.clone(), c.clone());
        Self {
            dim: c.len(),
            beta,
            eval: Arc::new(move |x: &Vector| &mm * x + &cc),
            affine: Some((m, c)),
            descriptor: descriptor.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> Modulus {
        self.beta
    }

    /// Replaces the declared constant by a smaller (more conservative) one.
    pub fn with_beta(mut self, beta: Modulus) -> Result<Self> {
        check_modulus(beta)?;
        self.beta = beta;
        Ok(self)
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// `(M, c)` when the operator is `x ↦ Mx + c`.
    pub fn affine_parts(&self) -> Option<(&Matrix, &Vector)> {
        self.affine.as_ref().map(|(m, c)| (m, c))
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim("cocoercive operator", self.dim, x.len())?;
        Ok((self.eval)(x))
    }
}

fn check_modulus(beta: Modulus) -> Result<()> {
    match beta {
        Modulus::Finite(b) if !(b > 0.0) || !b.is_finite() => Err(Error::InvalidParameter(format!(
            "cocoercivity constant must be positive, got {b}"
        ))),
        _ => Ok(()),
    }
}

fn affine_is_cocoercive(m: &Matrix, beta: f64) -> Result<bool> {
    let sym = (m + m.transpose()) * 0.5;
    let mtm = m.transpose() * m;
    let scale = 1.0 + m.amax() + beta * mtm.amax();
    loewner_geq(&sym, &(mtm * beta), 1e-12 * scale)
}

fn best_affine_modulus(m: &Matrix) -> Result<Modulus> {
    if m.iter().all(|v| *v == 0.0) {
        return Ok(Modulus::Infinite);
    }
    let norm = crate::linalg::spectral_norm(m);
    // For a symmetric PSD matrix the answer is 1/λ_max; in general 1/‖M‖ is an upper bound.
    let mut hi = 1.0 / norm * (1.0 + 1e-12);
    let mut lo = 0.0;
    if affine_is_cocoercive(m, hi)? {
        return Ok(Modulus::Finite(1.0 / norm));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if affine_is_cocoercive(m, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(Error::InvalidParameter("affine map is not cocoercive".into()));
    }
    // Shave the tolerance admitted by the Loewner test so the constant stays conservative.
    Ok(Modulus::Finite(lo * (1.0 - 1e-10)))
}

/// `T = Σ L_i* T_i L_i` with `β = 1 / Σ ‖L_i‖²/β_i`.
pub fn cocoercive_sum(terms: &[(LinearMap, CocoerciveOperator)]) -> Result<CocoerciveOperator> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidParameter("cocoercive sum needs a term".into()))?;
    let n = first.0.domain_dim();
    let mut recip = 0.0;
    for (i, (l, t)) in terms.iter().enumerate() {
        if l.is_zero() {
            return Err(Error::ZeroCoupling(i + 1));
        }
        check_dim("cocoercive sum domain", n, l.domain_dim())?;
        check_dim("cocoercive sum codomain", l.codomain_dim(), t.dim())?;
        recip += l.norm() * l.norm() * t.beta().reciprocal();
    }
    let beta = Modulus::from_reciprocal(recip);
    if terms.iter().all(|(_, t)| t.affine.is_some()) {
        let mut m = Matrix::zeros(n, n);
        let mut c = Vector::zeros(n);
        for (l, t) in terms {
            let (tm, tc) = t.affine.as_ref().expect("checked above");
            m += l.matrix().transpose() * tm * l.matrix();
            c += l.adjoint(tc);
        }
        return Ok(CocoerciveOperator::affine_unchecked(m, c, beta, "composite sum"));
    }
    let parts: Vec<(LinearMap, CocoerciveOperator)> = terms.to_vec();
    CocoerciveOperator::custom(n, beta, "composite sum", move |x: &Vector| {
        let mut out = Vector::zeros(x.len());
        for (l, t) in &parts {
            out += l.adjoint(&(t.eval)(&l.apply(x)));
        }
        out
    })
}

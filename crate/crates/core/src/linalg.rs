//! Dense symmetric positive-definite metrics and the inner products they induce.
//!
//! A [`Metric`] is an operator `U` with `U ≽ α Id` for a certified `α > 0`.
//! Its eigendecomposition is computed once at construction and reused for the
//! inverse, the square root and the inverse square root.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{check_dim, Error, Result};

/// A point of the ambient space (or of one block of a product space).
pub type Vector = DVector<f64>;
/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

/// Largest accepted ratio between the extreme eigenvalues of a metric.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative asymmetry below which a matrix is symmetrized instead of rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Returns `Err(NonFinite)` if any entry of `x` is NaN or infinite.
pub fn ensure_finite(context: &'static str, x: &Vector) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Symmetrizes `m` when its relative asymmetry is below [`SYMMETRY_TOLERANCE`].
pub fn symmetrize(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "symmetric matrix",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let scale = max_abs(m);
    let asym = max_abs(&(m - m.transpose()));
    if scale > 0.0 && asym / scale >= SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric {
            asymmetry: asym / scale,
        });
    }
    Ok((m + m.transpose()) * 0.5)
}

fn is_diagonal(m: &Matrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(m: &Matrix) -> (Vector, Matrix) {
    let n = m.nrows();
    if is_diagonal(m) {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)]));
        let vals = Vector::from_iterator(n, idx.iter().map(|&i| m[(i, i)]));
        let mut vecs = Matrix::zeros(n, n);
        for (k, &i) in idx.iter().enumerate() {
            vecs[(i, k)] = 1.0;
        }
        return (vals, vecs);
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Vector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = Matrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a symmetric matrix (symmetrized first).
pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    let s = symmetrize(m)?;
    if s.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(symmetric_eigen(&s).0[0])
}

/// Largest eigenvalue of a symmetric matrix (symmetrized first).
pub fn max_eigenvalue(m: &Matrix) -> Result<f64> {
    let s = symmetrize(m)?;
    if s.nrows() == 0 {
        return Ok(0.0);
    }
    let (vals, _) = symmetric_eigen(&s);
    Ok(vals[vals.len() - 1])
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if is_diagonal_rect(m) {
        let k = m.nrows().min(m.ncols());
        return (0..k).fold(0.0_f64, |acc, i| acc.max(m[(i, i)].abs()));
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(*v))
}

fn is_diagonal_rect(m: &Matrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Loewner comparison `a ≽ b`: true iff the smallest eigenvalue of `a − b` is at least `−slack`.
pub fn loewner_geq(a: &Matrix, b: &Matrix, slack: f64) -> Result<bool> {
    check_dim("loewner_geq", a.nrows(), b.nrows())?;
    check_dim("loewner_geq", a.ncols(), b.ncols())?;
    if !(slack >= 0.0) {
        return Err(Error::InvalidParameter(format!("slack must be >= 0, got {slack}")));
    }
    Ok(min_eigenvalue(&(a - b))? >= -slack)
}

fn spectral_function(vals: &Vector, vecs: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let s = f(vals[k]);
        for i in 0..n {
            scaled[(i, k)] *= s;
        }
    }
    let m = &scaled * vecs.transpose();
    (&m + m.transpose()) * 0.5
}

/// A symmetric positive-definite operator `U ∈ P_α` with cached spectral data.
#[derive(Clone, Debug)]
pub struct Metric {
    matrix: Matrix,
    inverse: Matrix,
    sqrt: Matrix,
    inv_sqrt: Matrix,
    eigenvalues: Vector,
    eigenvectors: Matrix,
    alpha: f64,
    diagonal: bool,
}

impl Metric {
    /// Builds a metric and certifies `λ_min(matrix) ≥ alpha > 0`.
    pub fn new(matrix: Matrix, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::NonPositiveBound(alpha));
        }
        let matrix = symmetrize(&matrix)?;
        let diagonal = is_diagonal(&matrix);
        let (vals, vecs) = symmetric_eigen(&matrix);
        let n = vals.len();
        if n == 0 {
            return Err(Error::InvalidParameter("metric of dimension 0".into()));
        }
        let lo = vals[0];
        let hi = vals[n - 1];
        if lo < alpha - 1e-12 * hi.abs().max(alpha) {
            return Err(Error::LowerBoundViolated {
                min_eigenvalue: lo,
                alpha,
            });
        }
        if hi / lo > MAX_CONDITION {
            return Err(Error::IllConditioned(hi / lo));
        }
        let (inverse, sqrt, inv_sqrt) = if diagonal {
            let d = matrix.diagonal();
            (
                Matrix::from_diagonal(&d.map(|v| 1.0 / v)),
                Matrix::from_diagonal(&d.map(libm::sqrt)),
                Matrix::from_diagonal(&d.map(|v| 1.0 / libm::sqrt(v))),
            )
        } else {
            (
                spectral_function(&vals, &vecs, |v| 1.0 / v),
                spectral_function(&vals, &vecs, libm::sqrt),
                spectral_function(&vals, &vecs, |v| 1.0 / libm::sqrt(v)),
            )
        };
        Ok(Self {
            matrix,
            inverse,
            sqrt,
            inv_sqrt,
            eigenvalues: vals,
            eigenvectors: vecs,
            alpha: alpha.min(lo),
            diagonal,
        })
    }

    /// Builds a metric whose bound is its computed smallest eigenvalue.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        let lo = min_eigenvalue(&matrix)?;
        if !(lo > 0.0) {
            return Err(Error::LowerBoundViolated {
                min_eigenvalue: lo,
                alpha: 0.0,
            });
        }
        Self::new(matrix, lo)
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0).expect("identity is a valid metric")
    }

    /// `t·Id`.
    pub fn scalar(dim: usize, t: f64) -> Result<Self> {
        Self::new(Matrix::identity(dim, dim) * t, t)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let d = Vector::from_column_slice(entries);
        let lo = entries.iter().copied().fold(f64::INFINITY, f64::min);
        Self::new(Matrix::from_diagonal(&d), lo)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &Matrix {
        &self.inverse
    }

    pub fn sqrt_matrix(&self) -> &Matrix {
        &self.sqrt
    }

    pub fn inv_sqrt_matrix(&self) -> &Matrix {
        &self.inv_sqrt
    }

    /// Certified lower Loewner bound.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Operator norm `‖U‖`, the largest eigenvalue.
    pub fn norm(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &Vector {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors, one per column, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Diagonal entries when the metric is diagonal.
    pub fn diagonal_entries(&self) -> Option<Vector> {
        self.diagonal.then(|| self.matrix.diagonal())
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    pub fn apply_inverse(&self, x: &Vector) -> Vector {
        &self.inverse * x
    }

    pub fn apply_sqrt(&self, x: &Vector) -> Vector {
        &self.sqrt * x
    }

    pub fn apply_inv_sqrt(&self, x: &Vector) -> Vector {
        &self.inv_sqrt * x
    }

    /// `⟨x, y⟩_U = ⟨Ux, y⟩`.
    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<f64> {
        check_dim("metric inner product", self.dim(), x.len())?;
        check_dim("metric inner product", self.dim(), y.len())?;
        Ok(self.apply(x).dot(y))
    }

    /// `‖x‖_U = √⟨Ux, x⟩`.
    pub fn norm_of(&self, x: &Vector) -> Result<f64> {
        Ok(libm::sqrt(self.inner(x, x)?.max(0.0)))
    }

    /// `‖x‖_{U⁻¹} = ‖U^{-1/2}x‖`.
    pub fn inverse_norm_of(&self, x: &Vector) -> f64 {
        self.apply_inv_sqrt(x).norm()
    }

    /// `U⁻¹` with certified bound `1/‖U‖`.
    pub fn inverse(&self) -> Metric {
        let vals = self.eigenvalues.map(|v| 1.0 / v);
        let n = vals.len();
        let mut idx: Vec<usize> = (0..n).rev().collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut vecs = Matrix::zeros(n, n);
        for (k, &i) in idx.iter().enumerate() {
            vecs.set_column(k, &self.eigenvectors.column(i));
        }
        Metric {
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
            sqrt: self.inv_sqrt.clone(),
            inv_sqrt: self.sqrt.clone(),
            eigenvalues: Vector::from_iterator(n, idx.iter().map(|&i| vals[i])),
            eigenvectors: vecs,
            alpha: 1.0 / self.norm(),
            diagonal: self.diagonal,
        }
    }

    /// `√U`, certified bound `√α`.
    pub fn sqrt(&self) -> Result<Metric> {
        let vals = self.eigenvalues.map(libm::sqrt);
        let (fourth, inv_fourth) = if self.diagonal {
            let d = self.matrix.diagonal();
            (
                Matrix::from_diagonal(&d.map(|v| libm::sqrt(libm::sqrt(v)))),
                Matrix::from_diagonal(&d.map(|v| 1.0 / libm::sqrt(libm::sqrt(v)))),
            )
        } else {
            (
                spectral_function(&self.eigenvalues, &self.eigenvectors, |v| libm::sqrt(libm::sqrt(v))),
                spectral_function(&self.eigenvalues, &self.eigenvectors, |v| {
                    1.0 / libm::sqrt(libm::sqrt(v))
                }),
            )
        };
        if vals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Factorization("square root of metric"));
        }
        Ok(Metric {
            matrix: self.sqrt.clone(),
            inverse: self.inv_sqrt.clone(),
            sqrt: fourth,
            inv_sqrt: inv_fourth,
            eigenvalues: vals,
            eigenvectors: self.eigenvectors.clone(),
            alpha: libm::sqrt(self.alpha),
            diagonal: self.diagonal,
        })
    }

    /// `t·U` for `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Metric> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("metric scale must be > 0, got {t}")));
        }
        let st = libm::sqrt(t);
        Ok(Metric {
            matrix: &self.matrix * t,
            inverse: &self.inverse / t,
            sqrt: &self.sqrt * st,
            inv_sqrt: &self.inv_sqrt / st,
            eigenvalues: &self.eigenvalues * t,
            eigenvectors: self.eigenvectors.clone(),
            alpha: self.alpha * t,
            diagonal: self.diagonal,
        })
    }

    /// Principal sub-block `[start, start + len)` as a metric of its own.
    pub fn block(&self, start: usize, len: usize) -> Result<Metric> {
        if start + len > self.dim() {
            return Err(Error::DimensionMismatch {
                context: "metric block",
                expected: self.dim(),
                found: start + len,
            });
        }
        let sub = self.matrix.view((start, start), (len, len)).into_owned();
        Metric::from_matrix(sub)
    }
}

/// Block-diagonal assembly of symmetric blocks.
pub fn block_diagonal(blocks: &[&Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(*b);
        off += k;
    }
    out
}

/// A bounded linear map `L: H → G` with its operator norm cached.
#[derive(Clone, Debug)]
pub struct LinearMap {
    matrix: Matrix,
    norm: f64,
}

impl LinearMap {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear map"));
        }
        let norm = spectral_norm(&matrix);
        Ok(Self { matrix, norm })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Matrix::identity(dim, dim),
            norm: 1.0,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `‖L‖`, the largest singular value.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|v| *v == 0.0)
    }

    /// Dimension of the domain `H`.
    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Dimension of the codomain `G`.
    pub fn codomain_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    /// `L* y`.
    pub fn adjoint(&self, y: &Vector) -> Vector {
        self.matrix.tr_mul(y)
    }

    pub fn scaled(&self, t: f64) -> LinearMap {
        LinearMap {
            matrix: &self.matrix * t,
            norm: self.norm * t.abs(),
        }
    }
}

/// Solves `m x = b` for a square matrix, via Cholesky when `m` is SPD and LU otherwise.
pub fn solve(m: &Matrix, b: &Vector) -> Result<Vector> {
    check_dim("linear solve", m.nrows(), b.len())?;
    // Cholesky reads only the lower triangle, so it is reserved for symmetric systems.
    if *m == m.transpose() {
        if let Some(ch) = m.clone().cholesky() {
            let x = ch.solve(b);
            if x.iter().all(|v| v.is_finite()) {
                return Ok(x);
            }
        }
    }
    m.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::Factorization("singular linear system"))
}

/// Inverse of a square matrix.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    m.clone()
        .try_inverse()
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::Factorization("singular matrix"))
}

use alloc::string::String;

/// Errors raised at the library boundary.
///
/// Runtime failures of an iteration (divergence, non-finite iterates) are not
/// errors: they are reported through [`crate::fb::Termination`] so the
/// partial trace stays available.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("smallest eigenvalue {min_eigenvalue:e} is below the declared bound alpha = {alpha:e}")]
    LowerBoundViolated { min_eigenvalue: f64, alpha: f64 },
    #[error("metric lower bound must be positive, got {0:e}")]
    NonPositiveBound(f64),
    #[error("condition number {0:e} exceeds the supported limit 1e12")]
    IllConditioned(f64),
    #[error("factorization failed: {0}")]
    Factorization(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside the closed-form catalog: {0}")]
    OutsideCatalog(String),
    #[error("no inverse-operator oracle available for {0}")]
    MissingInverse(String),
    #[error("coupling operator L_{0} is zero")]
    ZeroCoupling(usize),
    #[error("hypothesis validation failed in strict mode: {0}")]
    ValidationFailed(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

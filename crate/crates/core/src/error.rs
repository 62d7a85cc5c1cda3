use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
///
/// Programming errors (mismatched grids, wrong vector lengths) are contract
/// violations and panic instead of surfacing here.
#[derive(Debug, Error)]
pub enum SemError {
    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("{label}: solver diverged at iteration {iteration} (residual is not finite)")]
    Divergence { label: String, iteration: usize },

    #[error("factorization failed: nonpositive pivot {value:e} at index {index}")]
    Factorization { index: usize, value: f64 },

    #[error("local block of subdomain {subdomain} is singular; the operator needs Dirichlet rows or a coarse/zero-mean treatment")]
    SingularLocalBlock { subdomain: usize },

    #[error("pressure right-hand side is incompatible: mean {mean:e} remains after deflation")]
    IncompatibleRhs { mean: f64 },

    #[error("startup contract violated: {0}")]
    Startup(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = SemError> = std::result::Result<T, E>;

pub(crate) fn config_err(field: &'static str, reason: impl Into<String>) -> SemError {
    SemError::Config {
        field,
        reason: reason.into(),
    }
}

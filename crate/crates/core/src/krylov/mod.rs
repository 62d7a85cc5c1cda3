//! Conjugate gradients, preconditioners and the XXT coarse solver.

mod projection;
mod schwarz;
mod xxt;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result, SemError};
use crate::linalg::{axpy, dot, norm2, LinearOperator};

pub use projection::{project_guess, solve_projected, ProjectionHistory};
pub use schwarz::{build_schwarz, coarse_operator, SchwarzConfig, SchwarzPreconditioner, SchwarzProblem};
pub use xxt::{nested_dissection_order, xxt_factor, XxtFactor};

/// Which preconditioner a solve uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    None,
    Jacobi,
    Schwarz,
}

/// Settings of one family of linear solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovConfig {
    /// Stop once `||r|| <= tolerance * ||b||`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: PreconditionerKind,
    /// Number of previous solutions kept for initial-guess projection.
    #[serde(default)]
    pub projection_depth: usize,
}

impl KrylovConfig {
    pub fn new(tolerance: f64, max_iterations: usize, preconditioner: PreconditionerKind) -> Result<Self> {
        let cfg = Self {
            tolerance,
            max_iterations,
            preconditioner,
            projection_depth: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_projection(mut self, depth: usize) -> Self {
        self.projection_depth = depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(config_err("tolerance", format!("{} is outside (0, 1)", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(config_err("max_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||r_k|| / ||b||` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl SolveStats {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Approximate inverse `z = M^{-1} r`; must be symmetric positive definite.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal scaling.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(diag: &[f64]) -> Result<Self> {
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(SemError::Factorization { index: i, value: diag[i] });
        }
        Ok(Self {
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
        })
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

impl<P: Preconditioner + ?Sized> Preconditioner for &P {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        (**self).apply(r, z)
    }
}

impl<P: Preconditioner + ?Sized> Preconditioner for Box<P> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        (**self).apply(r, z)
    }
}

/// Preconditioned conjugate gradients for `A x = b`, starting from the
/// contents of `x`. The residual is measured relative to `||b||`.
///
/// Hitting `max_iterations` is reported through [`SolveStats::converged`];
/// a non-finite residual is an error.
pub fn pcg(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    m: &dyn Preconditioner,
    cfg: &KrylovConfig,
    label: &str,
) -> Result<SolveStats> {
    pcg_scaled(op, b, x, m, cfg, label, None)
}

/// [`pcg`] with the convergence test taken relative to `reference` instead of
/// `||b||` (used when `b` is already deflated).
pub(crate) fn pcg_scaled(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    m: &dyn Preconditioner,
    cfg: &KrylovConfig,
    label: &str,
    reference: Option<f64>,
) -> Result<SolveStats> {
    let n = op.len();
    assert_eq!(b.len(), n, "rhs length does not match the operator");
    assert_eq!(x.len(), n, "solution length does not match the operator");
    let mut rhs = b.to_vec();
    op.remove_nullspace(&mut rhs);
    let bnorm = reference.unwrap_or_else(|| norm2(&rhs));
    if bnorm == 0.0 || norm2(&rhs) == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual_history: vec![0.0],
            converged: true,
        });
    }
    if !bnorm.is_finite() {
        return Err(SemError::Divergence {
            label: label.to_string(),
            iteration: 0,
        });
    }
    op.remove_nullspace(x);
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(&rhs) {
        *ri = bi - *ri;
    }
    op.remove_nullspace(&mut r);
    let mut history = vec![norm2(&r) / bnorm];
    if !history[0].is_finite() {
        return Err(SemError::Divergence {
            label: label.to_string(),
            iteration: 0,
        });
    }
    if history[0] <= cfg.tolerance {
        return Ok(SolveStats {
            iterations: 0,
            residual_history: history,
            converged: true,
        });
    }
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    op.remove_nullspace(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=cfg.max_iterations {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        let alpha = rz / pap;
        if !alpha.is_finite() || pap <= 0.0 {
            return Err(SemError::Divergence {
                label: label.to_string(),
                iteration: it,
            });
        }
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let res = norm2(&r) / bnorm;
        if !res.is_finite() {
            return Err(SemError::Divergence {
                label: label.to_string(),
                iteration: it,
            });
        }
        history.push(res);
        if res <= cfg.tolerance {
            op.remove_nullspace(x);
            return Ok(SolveStats {
                iterations: it,
                residual_history: history,
                converged: true,
            });
        }
        m.apply(&r, &mut z);
        op.remove_nullspace(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    op.remove_nullspace(x);
    Ok(SolveStats {
        iterations: cfg.max_iterations,
        residual_history: history,
        converged: false,
    })
}

//! Initial guesses from the span of previous solutions.

use std::collections::VecDeque;

use super::{pcg_scaled, KrylovConfig, Preconditioner, SolveStats};
use crate::error::Result;
use crate::linalg::{axpy, dot, norm2, LinearOperator};

/// The last `depth` solutions of `A x = b`, kept with their images `A x`,
/// and an A-orthonormal basis of their span.
#[derive(Debug, Clone, Default)]
pub struct ProjectionHistory {
    depth: usize,
    window: VecDeque<(Vec<f64>, Vec<f64>)>,
    xs: Vec<Vec<f64>>,
    axs: Vec<Vec<f64>>,
}

impl ProjectionHistory {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            ..Self::default()
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Dimension of the stored span.
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// A-orthonormal basis vectors, oldest first.
    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.xs.iter().map(Vec::as_slice)
    }

    pub fn clear(&mut self) {
        self.window.clear();
        self.xs.clear();
        self.axs.clear();
    }

    /// Appends solution `x`, evicting the oldest when full, and rebuilds the
    /// basis. Costs one application of `op`.
    pub fn push(&mut self, op: &dyn LinearOperator, mut x: Vec<f64>) {
        if self.depth == 0 {
            return;
        }
        op.remove_nullspace(&mut x);
        let mut ax = vec![0.0; x.len()];
        op.apply(&x, &mut ax);
        if self.window.len() == self.depth {
            self.window.pop_front();
        }
        self.window.push_back((x, ax));
        self.rebuild();
    }

    /// Gram-Schmidt (twice) over the window in the A inner product, using the
    /// stored images so no further operator applications are needed.
    fn rebuild(&mut self) {
        self.xs.clear();
        self.axs.clear();
        for (x, ax) in &self.window {
            let (mut v, mut av) = (x.clone(), ax.clone());
            for _ in 0..2 {
                for (q, aq) in self.xs.iter().zip(&self.axs) {
                    let c = dot(aq, &v);
                    axpy(-c, q, &mut v);
                    axpy(-c, aq, &mut av);
                }
            }
            let norm2_a = dot(&v, &av);
            let scale = dot(x, ax);
            if !(norm2_a > 1e-20 * scale) || !norm2_a.is_finite() {
                continue;
            }
            let s = 1.0 / norm2_a.sqrt();
            v.iter_mut().for_each(|t| *t *= s);
            av.iter_mut().for_each(|t| *t *= s);
            self.xs.push(v);
            self.axs.push(av);
        }
    }
}

/// A-orthogonal projection of the solution of `A x = b` onto the history:
/// returns `x0 = sum_i (x_i . b) x_i` and the deflated rhs `b - A x0`.
pub fn project_guess(history: &ProjectionHistory, b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut x0 = vec![0.0; b.len()];
    let mut rhs = b.to_vec();
    for (x, ax) in history.xs.iter().zip(&history.axs) {
        let c = dot(x, b);
        axpy(c, x, &mut x0);
        axpy(-c, ax, &mut rhs);
    }
    (x0, rhs)
}

/// Solves `A x = b` starting from the projected guess, then records the new
/// solution in `history`. Convergence is measured against `||b||`.
pub fn solve_projected(
    op: &dyn LinearOperator,
    b: &[f64],
    m: &dyn Preconditioner,
    cfg: &KrylovConfig,
    history: &mut ProjectionHistory,
    label: &str,
) -> Result<(Vec<f64>, SolveStats)> {
    let mut bb = b.to_vec();
    op.remove_nullspace(&mut bb);
    let reference = norm2(&bb);
    let (mut x, rhs) = project_guess(history, &bb);
    let mut dx = vec![0.0; b.len()];
    let stats = pcg_scaled(op, &rhs, &mut dx, m, cfg, label, Some(reference))?;
    axpy(1.0, &dx, &mut x);
    op.remove_nullspace(&mut x);
    if norm2(&dx) > 0.0 {
        history.push(op, x.clone());
    }
    Ok((x, stats))
}

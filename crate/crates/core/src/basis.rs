//! One-dimensional spectral machinery: Gauss-Lobatto-Legendre (velocity) and
//! Gauss-Legendre (pressure) nodes and weights, Lagrange interpolation and
//! differentiation matrices.
//!
//! Every tensor-product operator in the crate is assembled from the 1D
//! matrices built here.

use std::f64::consts::PI;

use crate::error::{config_err, Result};
use crate::linalg::DenseMatrix;

/// Largest polynomial order accepted by the basis constructors.
pub const MAX_ORDER: usize = 32;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Legendre polynomial `P_n(x)` and its derivative, by the three-term
/// recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    // P_n' from the standard identity; at |x| = 1 use the closed form.
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < f64::EPSILON {
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// Velocity-grid basis of order `N` on the Gauss-Lobatto-Legendre points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    deriv: DenseMatrix,
}

impl SpectralBasis {
    pub fn new(order: usize) -> Result<Self> {
        build_gll_basis(order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Points per direction (`N + 1`).
    pub fn n(&self) -> usize {
        self.order + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `D[i][j] = l_j'(x_i)`.
    pub fn deriv(&self) -> &DenseMatrix {
        &self.deriv
    }
}

/// Pressure basis of order `N - 2` on the Gauss-Legendre points, plus the
/// matrices coupling it to the velocity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureBasis {
    velocity_order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    interp_v2p: DenseMatrix,
    deriv_v2p: DenseMatrix,
}

impl PressureBasis {
    pub fn new(velocity_order: usize) -> Result<Self> {
        build_pressure_basis(velocity_order)
    }

    pub fn velocity_order(&self) -> usize {
        self.velocity_order
    }

    /// Points per direction (`N - 1`).
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(N-1) x (N+1)` matrix evaluating velocity-grid Lagrange polynomials
    /// at the pressure nodes.
    pub fn interp_v2p(&self) -> &DenseMatrix {
        &self.interp_v2p
    }

    /// Derivative of the velocity-grid interpolant evaluated at the pressure
    /// nodes: `interp_v2p * D`.
    pub fn deriv_v2p(&self) -> &DenseMatrix {
        &self.deriv_v2p
    }
}

/// Builds the Gauss-Lobatto-Legendre basis of order `order`.
pub fn build_gll_basis(order: usize) -> Result<SpectralBasis> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(config_err(
            "order",
            format!("polynomial order {order} outside 1..={MAX_ORDER}"),
        ));
    }
    let (nodes, weights) = gll_points(order);
    let deriv = build_deriv_matrix(&nodes);
    Ok(SpectralBasis {
        order,
        nodes,
        weights,
        deriv,
    })
}

/// Builds the staggered pressure basis for velocity order `velocity_order`.
pub fn build_pressure_basis(velocity_order: usize) -> Result<PressureBasis> {
    if velocity_order < 3 {
        return Err(config_err(
            "order",
            format!("pressure grid needs velocity order >= 3, got {velocity_order}"),
        ));
    }
    let velocity = build_gll_basis(velocity_order)?;
    let (nodes, weights) = gauss_points(velocity_order - 1);
    let interp_v2p = interpolation_matrix(velocity.nodes(), &nodes);
    let deriv_v2p = interp_v2p.matmul(velocity.deriv());
    Ok(PressureBasis {
        velocity_order,
        nodes,
        weights,
        interp_v2p,
        deriv_v2p,
    })
}

/// Nodes and weights of the `order + 1` point Gauss-Lobatto-Legendre rule.
fn gll_points(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // Interior nodes are zeros of P_N'; solve the lower half and mirror.
    for j in 1..=(n.saturating_sub(1)) / 2 {
        let mut x = -(PI * j as f64 / nf).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(n, x);
            let update = (1.0 - x * x) * dp / (nf * (nf + 1.0) * p);
            x += update;
            if update.abs() < NEWTON_TOL {
                break;
            }
        }
        nodes[j] = x;
        nodes[n - j] = -x;
    }
    let weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    let weights = symmetrize(weights);
    (nodes, weights)
}

/// Nodes and weights of the `count` point Gauss-Legendre rule.
fn gauss_points(count: usize) -> (Vec<f64>, Vec<f64>) {
    let m = count;
    let mut nodes = vec![0.0; m];
    for i in 0..m / 2 {
        let mut x = -(PI * (2 * i + 1) as f64 / (2 * m) as f64).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(m, x);
            let update = p / dp;
            x -= update;
            if update.abs() < NEWTON_TOL {
                break;
            }
        }
        nodes[i] = x;
        nodes[m - 1 - i] = -x;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, dp) = legendre(m, x);
            2.0 / ((1.0 - x * x) * dp * dp)
        })
        .collect();
    (nodes, symmetrize(weights))
}

fn symmetrize(mut w: Vec<f64>) -> Vec<f64> {
    let n = w.len();
    for i in 0..n / 2 {
        w[n - 1 - i] = w[i];
    }
    w
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let prod: f64 = (0..nodes.len())
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product();
            1.0 / prod
        })
        .collect()
}

/// Lagrange differentiation matrix on `nodes`: `D[i][j] = l_j'(x_i)`.
///
/// The diagonal is the negative row sum of the off-diagonal entries, so
/// constants are differentiated to zero up to a single rounding per row.
pub fn build_deriv_matrix(nodes: &[f64]) -> DenseMatrix {
    let n = nodes.len();
    let lambda = barycentric_weights(nodes);
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = lambda[j] / lambda[i] / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Matrix evaluating the Lagrange interpolant through `nodes` at `points`.
pub fn interpolation_matrix(nodes: &[f64], points: &[f64]) -> DenseMatrix {
    let lambda = barycentric_weights(nodes);
    let mut m = DenseMatrix::zeros(points.len(), nodes.len());
    for (i, &y) in points.iter().enumerate() {
        if let Some(j) = nodes.iter().position(|&x| x == y) {
            m[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = nodes
            .iter()
            .zip(&lambda)
            .map(|(&x, &l)| l / (y - x))
            .collect();
        let denom: f64 = terms.iter().sum();
        for (j, t) in terms.iter().enumerate() {
            m[(i, j)] = t / denom;
        }
    }
    m
}

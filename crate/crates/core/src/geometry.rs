//! Trilinear element geometry: node coordinates, metric factors for the
//! Helmholtz kernel, and inverse-Jacobian terms for gradients/divergence.

use rayon::prelude::*;

use crate::basis::{PressureBasis, SpectralBasis};
use crate::error::{Result, SemError};
use crate::field::{Field, Grid};
use crate::mesh::HexMesh;

/// Position and Jacobian `J[d][a] = dx_d/dr_a` of the trilinear map at a
/// reference point.
pub fn trilinear_map(corners: &[[f64; 3]; 8], r: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut x = [0.0; 3];
    let mut jac = [[0.0; 3]; 3];
    for (c, p) in corners.iter().enumerate() {
        let sides = [0, 1, 2].map(|a| if (c >> a) & 1 == 1 { 1.0 } else { -1.0 });
        let f = [0, 1, 2].map(|a| 0.5 * (1.0 + sides[a] * r[a]));
        let df = sides.map(|s| 0.5 * s);
        let shape = f[0] * f[1] * f[2];
        let dshape = [df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]];
        for d in 0..3 {
            x[d] += shape * p[d];
            for a in 0..3 {
                jac[d][a] += dshape[a] * p[d];
            }
        }
    }
    (x, jac)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of `J`, returned as `rx[a][d] = dr_a/dx_d`, with the determinant.
fn inverse_jacobian(jac: &[[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let det = det3(jac);
    let m = jac;
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    // inv[a][d] = adj[a][d] / det, adj = cofactor^T
    let inv = [
        [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
        [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
        [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
    ];
    (inv, det)
}

/// Calls `f(element, local node, reference point, weight)` for each tensor node.
fn for_each_node(n1d: &[f64], w1d: &[f64], mut f: impl FnMut(usize, [f64; 3], f64)) {
    let n = n1d.len();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                f(i + n * (j + n * k), [n1d[i], n1d[j], n1d[k]], w1d[i] * w1d[j] * w1d[k]);
            }
        }
    }
}

/// Metric terms of the Helmholtz kernel at every velocity node.
///
/// `g1..g6` are the entries of `J w_i w_j w_k (grad r)(grad r)^T` in the order
/// `rr, ss, tt, rs, rt, st`; `bm` is `J w_i w_j w_k`.
#[derive(Debug, Clone)]
pub struct GeometricFactors {
    n: usize,
    num_elements: usize,
    pub g: [Vec<f64>; 6],
    pub bm: Vec<f64>,
    pub jac: Vec<f64>,
}

/// Computes [`GeometricFactors`] for `mesh` on the velocity grid of `basis`.
pub fn build_geometric_factors(mesh: &HexMesh, basis: &SpectralBasis) -> Result<GeometricFactors> {
    let n = basis.n();
    let npe = n * n * n;
    let ne = mesh.num_elements();
    let per_element: Vec<Result<Vec<[f64; 8]>>> = (0..ne)
        .into_par_iter()
        .map(|e| {
            let corners = mesh.corners(e);
            let mut out = vec![[0.0; 8]; npe];
            let mut bad = None;
            for_each_node(basis.nodes(), basis.weights(), |l, r, w| {
                let (_, jac) = trilinear_map(&corners, r);
                let (rx, det) = inverse_jacobian(&jac);
                if !(det > 0.0) && bad.is_none() {
                    bad = Some(det);
                }
                let gij = |a: usize, b: usize| det * w * (0..3).map(|d| rx[a][d] * rx[b][d]).sum::<f64>();
                out[l] = [gij(0, 0), gij(1, 1), gij(2, 2), gij(0, 1), gij(0, 2), gij(1, 2), det * w, det];
            });
            match bad {
                Some(det) => Err(SemError::Mesh(format!("element {e} has nonpositive Jacobian {det:e}"))),
                None => Ok(out),
            }
        })
        .collect();
    let mut gf = GeometricFactors {
        n,
        num_elements: ne,
        g: std::array::from_fn(|_| Vec::with_capacity(ne * npe)),
        bm: Vec::with_capacity(ne * npe),
        jac: Vec::with_capacity(ne * npe),
    };
    for block in per_element {
        for v in block? {
            for m in 0..6 {
                gf.g[m].push(v[m]);
            }
            gf.bm.push(v[6]);
            gf.jac.push(v[7]);
        }
    }
    Ok(gf)
}

impl GeometricFactors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// Bytes held by the factor arrays.
    pub fn bytes(&self) -> usize {
        8 * (6 * self.bm.len() + self.bm.len() + self.jac.len())
    }
}

/// Inverse-Jacobian terms on both grids, used by the gradient, divergence and
/// advection operators. Index `rx[3 * a + d] = dr_a/dx_d`.
#[derive(Debug, Clone)]
pub struct MetricTerms {
    pub vel_rx: [Vec<f64>; 9],
    pub pres_rx: [Vec<f64>; 9],
    /// `J w_i w_j w_k` at Gauss-Legendre nodes.
    pub pres_wj: Vec<f64>,
}

impl MetricTerms {
    pub fn build(mesh: &HexMesh, basis: &SpectralBasis, pressure: Option<&PressureBasis>) -> Result<Self> {
        let (vel_rx, _) = inverse_terms(mesh, basis.nodes(), basis.weights())?;
        let (pres_rx, pres_wj) = match pressure {
            Some(p) => inverse_terms(mesh, p.nodes(), p.weights())?,
            None => (std::array::from_fn(|_| Vec::new()), Vec::new()),
        };
        Ok(Self {
            vel_rx,
            pres_rx,
            pres_wj,
        })
    }
}

fn inverse_terms(mesh: &HexMesh, nodes: &[f64], weights: &[f64]) -> Result<([Vec<f64>; 9], Vec<f64>)> {
    let mut rx: [Vec<f64>; 9] = std::array::from_fn(|_| Vec::new());
    let mut wj = Vec::new();
    for e in 0..mesh.num_elements() {
        let corners = mesh.corners(e);
        let mut bad = None;
        for_each_node(nodes, weights, |_, r, w| {
            let (_, jac) = trilinear_map(&corners, r);
            let (inv, det) = inverse_jacobian(&jac);
            if !(det > 0.0) {
                bad = Some(det);
            }
            for a in 0..3 {
                for d in 0..3 {
                    rx[3 * a + d].push(inv[a][d]);
                }
            }
            wj.push(det * w);
        });
        if let Some(det) = bad {
            return Err(SemError::Mesh(format!("element {e} has nonpositive Jacobian {det:e}")));
        }
    }
    Ok((rx, wj))
}

/// Physical coordinates of every node of the tensor grid on `nodes_1d`.
pub fn grid_coordinates(mesh: &HexMesh, nodes_1d: &[f64], grid: Grid) -> [Field; 3] {
    let n = nodes_1d.len();
    let ne = mesh.num_elements();
    let mut xyz: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(ne * n * n * n));
    for e in 0..ne {
        let corners = mesh.corners(e);
        for_each_node(nodes_1d, &vec![1.0; n], |_, r, _| {
            let (x, _) = trilinear_map(&corners, r);
            for d in 0..3 {
                xyz[d].push(x[d]);
            }
        });
    }
    xyz.map(|v| Field::from_values(grid, ne, n, v))
}

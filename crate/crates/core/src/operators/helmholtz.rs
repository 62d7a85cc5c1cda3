//! Matrix-free element-local Helmholtz operator.

use rayon::prelude::*;

use super::tensor::local_grad;
use crate::basis::SpectralBasis;
use crate::error::{config_err, Result};
use crate::field::{Field, Grid};
use crate::geometry::GeometricFactors;
use crate::linalg::DenseMatrix;

/// A scalar or per-local-node coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Scalar(f64),
    Nodal(Vec<f64>),
}

impl Coefficient {
    fn is_zero(&self) -> bool {
        match self {
            Coefficient::Scalar(v) => *v == 0.0,
            Coefficient::Nodal(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    fn is_nonnegative(&self) -> bool {
        match self {
            Coefficient::Scalar(v) => *v >= 0.0,
            Coefficient::Nodal(v) => v.iter().all(|&x| x >= 0.0),
        }
    }

    fn element<'a>(&'a self, e: usize, npe: usize, scratch: &'a mut Vec<f64>) -> &'a [f64] {
        match self {
            Coefficient::Nodal(v) => &v[e * npe..(e + 1) * npe],
            Coefficient::Scalar(s) => {
                scratch.clear();
                scratch.resize(npe, *s);
                scratch
            }
        }
    }
}

/// Weights of `h1 * stiffness + h2 * mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzCoeffs {
    pub h1: Coefficient,
    pub h2: Coefficient,
}

impl HelmholtzCoeffs {
    pub fn new(h1: Coefficient, h2: Coefficient) -> Result<Self> {
        if !h1.is_nonnegative() || !h2.is_nonnegative() {
            return Err(config_err("helmholtz", "h1 and h2 must be nonnegative"));
        }
        if h1.is_zero() && h2.is_zero() {
            return Err(config_err("helmholtz", "h1 and h2 are both zero"));
        }
        Ok(Self { h1, h2 })
    }

    pub fn scalar(h1: f64, h2: f64) -> Result<Self> {
        Self::new(Coefficient::Scalar(h1), Coefficient::Scalar(h2))
    }

    /// Stiffness only (`h1 = 1`, `h2 = 0`).
    pub fn laplacian() -> Self {
        Self {
            h1: Coefficient::Scalar(1.0),
            h2: Coefficient::Scalar(0.0),
        }
    }
}

/// Element-local Helmholtz operator: `w = h1 * K_e u + h2 * B_e u`.
///
/// The stiffness part follows the shared-memory GPU kernel: reference
/// derivatives along r, s, t; combination with the six metric terms scaled
/// by `h1`; then contraction with `D^T` along each direction. No gather is
/// performed; the assembled operator is `mask(gs_sum(axhelm(u)))`.
pub fn axhelm(u: &Field, coeffs: &HelmholtzCoeffs, gf: &GeometricFactors, basis: &SpectralBasis) -> Field {
    assert_eq!(u.grid(), Grid::Velocity, "axhelm needs a velocity-grid field");
    assert_eq!((u.num_elements(), u.n()), (gf.num_elements(), basis.n()), "field shape mismatch");
    let mut w = Field::zeros_like(u);
    axhelm_into(u.values(), coeffs, gf, basis, w.values_mut());
    w
}

/// Flat-slice form of [`axhelm`].
pub fn axhelm_into(u: &[f64], coeffs: &HelmholtzCoeffs, gf: &GeometricFactors, basis: &SpectralBasis, w: &mut [f64]) {
    let n = basis.n();
    let npe = n * n * n;
    assert_eq!(u.len(), gf.num_elements() * npe, "axhelm: input length mismatch");
    assert_eq!(w.len(), u.len(), "axhelm: output length mismatch");
    w.par_chunks_mut(npe)
        .enumerate()
        .for_each_init(Scratch::default, |scratch, (e, we)| {
            apply_element(e, &u[e * npe..(e + 1) * npe], we, coeffs, gf, basis, scratch)
        });
}

#[derive(Default)]
struct Scratch {
    work: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

fn apply_element(
    e: usize,
    ue: &[f64],
    we: &mut [f64],
    coeffs: &HelmholtzCoeffs,
    gf: &GeometricFactors,
    basis: &SpectralBasis,
    scratch: &mut Scratch,
) {
    let n = basis.n();
    let npe = n * n * n;
    let d = basis.deriv();
    let range = e * npe..(e + 1) * npe;
    we.iter_mut().for_each(|v| *v = 0.0);
    if !coeffs.h1.is_zero() {
        let h1 = coeffs.h1.element(e, npe, &mut scratch.h1);
        scratch.work.resize(3 * npe, 0.0);
        let (ur, rest) = scratch.work.split_at_mut(npe);
        let (us, ut) = rest.split_at_mut(npe);
        local_grad(d, ue, ur, us, ut);
        let g = |m: usize| &gf.g[m][range.clone()];
        let (g1, g2, g3, g4, g5, g6) = (g(0), g(1), g(2), g(3), g(4), g(5));
        for l in 0..npe {
            let (r, s, t) = (ur[l], us[l], ut[l]);
            let wr = g1[l] * r + g4[l] * s + g5[l] * t;
            let ws = g2[l] * s + g4[l] * r + g6[l] * t;
            let wt = g3[l] * t + g5[l] * r + g6[l] * s;
            ur[l] = wr * h1[l];
            us[l] = ws * h1[l];
            ut[l] = wt * h1[l];
        }
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += d[(l, i)] * ur[l + n * (j + n * k)]
                            + d[(l, j)] * us[i + n * (l + n * k)]
                            + d[(l, k)] * ut[i + n * (j + n * l)];
                    }
                    we[i + n * (j + n * k)] = acc;
                }
            }
        }
    }
    if !coeffs.h2.is_zero() {
        let h2 = coeffs.h2.element(e, npe, &mut scratch.h2);
        let bm = &gf.bm[range];
        for l in 0..npe {
            we[l] += h2[l] * bm[l] * ue[l];
        }
    }
}

/// Dense local matrix of element `e`, column by column from the kernel.
pub fn element_matrix(coeffs: &HelmholtzCoeffs, gf: &GeometricFactors, basis: &SpectralBasis, e: usize) -> DenseMatrix {
    let npe = basis.n().pow(3);
    let mut m = DenseMatrix::zeros(npe, npe);
    let mut scratch = Scratch::default();
    let mut unit = vec![0.0; npe];
    let mut col = vec![0.0; npe];
    for j in 0..npe {
        unit[j] = 1.0;
        apply_element(e, &unit, &mut col, coeffs, gf, basis, &mut scratch);
        unit[j] = 0.0;
        for i in 0..npe {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Diagonal of the element-local Helmholtz matrices (unassembled).
pub fn helmholtz_diagonal(coeffs: &HelmholtzCoeffs, gf: &GeometricFactors, basis: &SpectralBasis) -> Vec<f64> {
    let n = basis.n();
    let npe = n * n * n;
    let d = basis.deriv();
    let mut diag = vec![0.0; gf.num_elements() * npe];
    diag.par_chunks_mut(npe).enumerate().for_each_init(
        || (Vec::new(), Vec::new()),
        |(h1buf, h2buf), (e, de)| {
            let off = e * npe;
            let h1 = coeffs.h1.element(e, npe, h1buf).to_vec();
            let h2 = coeffs.h2.element(e, npe, h2buf);
            let idx = |i: usize, j: usize, k: usize| i + n * (j + n * k);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            let q = idx(l, j, k);
                            s += d[(l, i)] * d[(l, i)] * gf.g[0][off + q] * h1[q];
                            let q = idx(i, l, k);
                            s += d[(l, j)] * d[(l, j)] * gf.g[1][off + q] * h1[q];
                            let q = idx(i, j, l);
                            s += d[(l, k)] * d[(l, k)] * gf.g[2][off + q] * h1[q];
                        }
                        let p = idx(i, j, k);
                        let (dii, djj, dkk) = (d[(i, i)], d[(j, j)], d[(k, k)]);
                        s += 2.0
                            * h1[p]
                            * (dii * djj * gf.g[3][off + p] + dii * dkk * gf.g[4][off + p] + djj * dkk * gf.g[5][off + p]);
                        de[p] = s + h2[p] * gf.bm[off + p];
                    }
                }
            }
        },
    );
    diag
}

/// Analytic flop count of one [`axhelm`] application on `num_elements`
/// elements of order `order`: two contraction sweeps (`12 n^4`) plus the
/// metric combination (`15 n^3`), `n = order + 1`.
pub fn axhelm_flops(num_elements: usize, order: usize) -> f64 {
    let n = (order + 1) as f64;
    num_elements as f64 * (12.0 * n.powi(4) + 15.0 * n.powi(3))
}

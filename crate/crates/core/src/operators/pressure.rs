//! Coupling between the velocity (GLL, order N) and pressure (GL, N-1
//! points) grids: weak divergence and its exact transpose.

use rayon::prelude::*;

use super::tensor::tensor3;
use crate::basis::PressureBasis;
use crate::field::{Field, Grid, VectorField};
use crate::geometry::MetricTerms;
use crate::linalg::DenseMatrix;

/// One-dimensional factors of the staggered operators.
#[derive(Debug, Clone)]
pub struct StaggeredOperators {
    interp: DenseMatrix,
    deriv: DenseMatrix,
    interp_t: DenseMatrix,
    deriv_t: DenseMatrix,
}

impl StaggeredOperators {
    pub fn new(pressure: &PressureBasis) -> Self {
        Self {
            interp: pressure.interp_v2p().clone(),
            deriv: pressure.deriv_v2p().clone(),
            interp_t: pressure.interp_v2p().transpose(),
            deriv_t: pressure.deriv_v2p().transpose(),
        }
    }

    /// Velocity points per direction.
    pub fn nv(&self) -> usize {
        self.interp.cols()
    }

    /// Pressure points per direction.
    pub fn np(&self) -> usize {
        self.interp.rows()
    }

    /// `(ar, as, at)` for the reference derivative along axis `a`.
    fn factors(&self, a: usize) -> [&DenseMatrix; 3] {
        let mut f = [&self.interp; 3];
        f[a] = &self.deriv;
        f
    }

    fn factors_t(&self, a: usize) -> [&DenseMatrix; 3] {
        let mut f = [&self.interp_t; 3];
        f[a] = &self.deriv_t;
        f
    }
}

/// Weak divergence `(D u)_q = W_q J_q sum_d (du_d/dx_d)(x_q)` at the pressure
/// nodes, i.e. the integral of `div u` against each pressure basis function.
pub fn divergence_to_pressure(u: &VectorField, ops: &StaggeredOperators, metrics: &MetricTerms) -> Field {
    for c in u {
        assert_eq!(c.grid(), Grid::Velocity, "divergence needs velocity-grid inputs");
        u[0].assert_compatible(c);
    }
    let (nv, np) = (ops.nv(), ops.np());
    assert_eq!(u[0].n(), nv, "field order does not match the pressure basis");
    let ne = u[0].num_elements();
    let (nvpe, nppe) = (nv * nv * nv, np * np * np);
    assert_eq!(metrics.pres_wj.len(), ne * nppe, "metric terms do not match the field");
    let mut out = Field::zeros(Grid::Pressure, ne, np);
    out.values_mut()
        .par_chunks_mut(nppe)
        .enumerate()
        .for_each_init(
            || (vec![0.0; nppe], Vec::new()),
            |(tmp, work), (e, oe)| {
                let off = e * nppe;
                for (d, comp) in u.iter().enumerate() {
                    let ue = &comp.values()[e * nvpe..(e + 1) * nvpe];
                    for a in 0..3 {
                        let [ar, as_, at] = ops.factors(a);
                        tensor3(ar, as_, at, ue, tmp, work);
                        let rx = &metrics.pres_rx[3 * a + d][off..off + nppe];
                        for q in 0..nppe {
                            oe[q] += rx[q] * tmp[q];
                        }
                    }
                }
                let wj = &metrics.pres_wj[off..off + nppe];
                for q in 0..nppe {
                    oe[q] *= wj[q];
                }
            },
        );
    out
}

/// Exact transpose of [`divergence_to_pressure`] in the unweighted pairing.
/// Equals minus the weak pressure gradient, `-(grad p, v)` tested against
/// each velocity basis function (element-local, unassembled).
pub fn gradient_from_pressure(p: &Field, ops: &StaggeredOperators, metrics: &MetricTerms) -> VectorField {
    assert_eq!(p.grid(), Grid::Pressure, "gradient needs a pressure-grid input");
    let (nv, np) = (ops.nv(), ops.np());
    assert_eq!(p.n(), np, "field order does not match the pressure basis");
    let ne = p.num_elements();
    let (nvpe, nppe) = (nv * nv * nv, np * np * np);
    let mut flat = vec![0.0; 3 * ne * nvpe];
    // element-major scratch, split into components afterwards
    flat.par_chunks_mut(3 * nvpe)
        .enumerate()
        .for_each_init(
            || (vec![0.0; nppe], vec![0.0; nvpe], Vec::new()),
            |(t, tmp, work), (e, oe)| {
                let off = e * nppe;
                let pe = p.element(e);
                let wj = &metrics.pres_wj[off..off + nppe];
                for d in 0..3 {
                    let od = &mut oe[d * nvpe..(d + 1) * nvpe];
                    for a in 0..3 {
                        let rx = &metrics.pres_rx[3 * a + d][off..off + nppe];
                        for q in 0..nppe {
                            t[q] = wj[q] * rx[q] * pe[q];
                        }
                        let [ar, as_, at] = ops.factors_t(a);
                        tensor3(ar, as_, at, t, tmp, work);
                        for (o, v) in od.iter_mut().zip(tmp.iter()) {
                            *o += v;
                        }
                    }
                }
            },
        );
    std::array::from_fn(|d| {
        let mut v = Vec::with_capacity(ne * nvpe);
        for e in 0..ne {
            v.extend_from_slice(&flat[(3 * e + d) * nvpe..(3 * e + d + 1) * nvpe]);
        }
        Field::from_values(Grid::Velocity, ne, nv, v)
    })
}

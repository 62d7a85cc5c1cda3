use rayon::prelude::*;

use super::tensor::local_grad;
use crate::basis::SpectralBasis;
use crate::field::{Field, Grid, VectorField};
use crate::geometry::{GeometricFactors, MetricTerms};

/// Physical gradient of a velocity-grid field at its own nodes.
pub fn grad_velocity(u: &Field, metrics: &MetricTerms, basis: &SpectralBasis) -> VectorField {
    assert_eq!(u.grid(), Grid::Velocity, "gradient needs a velocity-grid field");
    let n = basis.n();
    assert_eq!(u.n(), n, "field order does not match the basis");
    let npe = n * n * n;
    let ne = u.num_elements();
    assert_eq!(metrics.vel_rx[0].len(), ne * npe, "metric terms do not match the field");
    let mut out: VectorField = std::array::from_fn(|_| Field::zeros(Grid::Velocity, ne, n));
    let [gx, gy, gz] = &mut out;
    gx.values_mut()
        .par_chunks_mut(npe)
        .zip(gy.values_mut().par_chunks_mut(npe))
        .zip(gz.values_mut().par_chunks_mut(npe))
        .enumerate()
        .for_each_init(
            || vec![0.0; 3 * npe],
            |work, (e, ((ox, oy), oz))| {
                let (ur, rest) = work.split_at_mut(npe);
                let (us, ut) = rest.split_at_mut(npe);
                local_grad(basis.deriv(), u.element(e), ur, us, ut);
                let off = e * npe;
                for (d, o) in [ox, oy, oz].into_iter().enumerate() {
                    let (r0, r1, r2) = (&metrics.vel_rx[d], &metrics.vel_rx[3 + d], &metrics.vel_rx[6 + d]);
                    for l in 0..npe {
                        o[l] = r0[off + l] * ur[l] + r1[off + l] * us[l] + r2[off + l] * ut[l];
                    }
                }
            },
        );
    out
}

/// Mass-weighted convective term `bm * (c . grad) u_i` for each component,
/// evaluated pointwise on the velocity grid without over-integration.
pub fn advect(
    u: &VectorField,
    c: &VectorField,
    gf: &GeometricFactors,
    metrics: &MetricTerms,
    basis: &SpectralBasis,
) -> VectorField {
    for f in u.iter().chain(c.iter()) {
        assert_eq!(f.grid(), Grid::Velocity, "advection needs velocity-grid fields");
        u[0].assert_compatible(f);
    }
    std::array::from_fn(|i| {
        let grad = grad_velocity(&u[i], metrics, basis);
        let mut out = Field::zeros_like(&u[i]);
        out.values_mut().par_iter_mut().enumerate().with_min_len(4096).for_each(|(l, o)| {
            let conv: f64 = (0..3).map(|d| c[d].values()[l] * grad[d].values()[l]).sum();
            *o = gf.bm[l] * conv;
        });
        out
    })
}

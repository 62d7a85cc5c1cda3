use std::sync::OnceLock;

use rayon::prelude::*;

use super::helmholtz::{axhelm_into, helmholtz_diagonal, HelmholtzCoeffs};
use super::pressure::{divergence_to_pressure, gradient_from_pressure, StaggeredOperators};
use crate::basis::{PressureBasis, SpectralBasis};
use crate::error::Result;
use crate::field::{Field, Grid, VectorField};
use crate::geometry::{build_geometric_factors, grid_coordinates, GeometricFactors, MetricTerms};
use crate::gs::{build_gather_scatter, GatherScatterMap};
use crate::linalg::{remove_mean, DenseMatrix, LinearOperator};
use crate::mesh::HexMesh;

/// Everything needed to apply the discrete operators on one mesh and order.
///
/// Velocity unknowns are solved for as assembled (global) vectors; every
/// non-periodic boundary is a no-slip wall, imposed by masking.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: HexMesh,
    pub basis: SpectralBasis,
    pub pressure: PressureBasis,
    pub gs: GatherScatterMap,
    pub gf: GeometricFactors,
    pub metrics: MetricTerms,
    pub staggered: StaggeredOperators,
    /// Velocity-node coordinates.
    pub coords: [Field; 3],
    /// Pressure-node coordinates.
    pub pressure_coords: [Field; 3],
    /// 1 on free global velocity nodes, 0 on walls.
    pub mask: Vec<f64>,
    /// Assembled diagonal mass matrix.
    pub mass: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: HexMesh, order: usize) -> Result<Self> {
        let basis = SpectralBasis::new(order)?;
        let pressure = PressureBasis::new(order)?;
        let gs = build_gather_scatter(&mesh, order);
        let gf = build_geometric_factors(&mesh, &basis)?;
        let metrics = MetricTerms::build(&mesh, &basis, Some(&pressure))?;
        let staggered = StaggeredOperators::new(&pressure);
        let coords = grid_coordinates(&mesh, basis.nodes(), Grid::Velocity);
        let pressure_coords = grid_coordinates(&mesh, pressure.nodes(), Grid::Pressure);
        let dims = mesh.lattice_dims(order);
        let periodic = mesh.periodic();
        let mask = (0..gs.num_global())
            .map(|g| {
                let l = [g % dims[0], (g / dims[0]) % dims[1], g / (dims[0] * dims[1])];
                let wall = (0..3).any(|d| !periodic[d] && (l[d] == 0 || l[d] + 1 == dims[d]));
                if wall {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        let mass = gs.gather(&gf.bm);
        Ok(Self {
            mesh,
            basis,
            pressure,
            gs,
            gf,
            metrics,
            staggered,
            coords,
            pressure_coords,
            mask,
            mass,
        })
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn num_global(&self) -> usize {
        self.gs.num_global()
    }

    /// Pressure unknowns, `E (N-1)^3`.
    pub fn num_pressure(&self) -> usize {
        let m = self.pressure.n();
        self.num_elements() * m * m * m
    }

    pub fn velocity_field(&self, values: Vec<f64>) -> Field {
        Field::from_values(Grid::Velocity, self.num_elements(), self.basis.n(), values)
    }

    pub fn pressure_field(&self, values: Vec<f64>) -> Field {
        Field::from_values(Grid::Pressure, self.num_elements(), self.pressure.n(), values)
    }

    /// Scatters a global vector to a continuous local field.
    pub fn to_local(&self, global: &[f64]) -> Field {
        let mut f = Field::zeros(Grid::Velocity, self.num_elements(), self.basis.n());
        self.gs.scatter(global, f.values_mut());
        f
    }

    /// Reads a continuous local field at one copy of each global node.
    pub fn to_global(&self, local: &Field) -> Vec<f64> {
        assert_eq!(local.grid(), Grid::Velocity, "to_global needs a velocity-grid field");
        (0..self.num_global()).map(|g| local.values()[self.gs.copies(g)[0]]).collect()
    }

    /// Evaluates `f` at velocity nodes as a global vector.
    pub fn interpolate_global(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.num_global())
            .map(|g| {
                let l = self.gs.copies(g)[0];
                f([0, 1, 2].map(|d| self.coords[d].values()[l]))
            })
            .collect()
    }

    /// Evaluates `f` at pressure nodes.
    pub fn interpolate_pressure(&self, f: impl Fn([f64; 3]) -> f64) -> Field {
        let v = (0..self.num_pressure())
            .map(|q| f([0, 1, 2].map(|d| self.pressure_coords[d].values()[q])))
            .collect();
        self.pressure_field(v)
    }

    pub fn helmholtz(&self, coeffs: HelmholtzCoeffs) -> HelmholtzSystem<'_> {
        HelmholtzSystem {
            disc: self,
            coeffs,
            element_matrices: OnceLock::new(),
        }
    }

    pub fn pressure_system(&self) -> PressureSystem<'_> {
        PressureSystem { disc: self }
    }

    /// Weak divergence of a velocity given as three global vectors.
    pub fn divergence(&self, u: &[Vec<f64>; 3]) -> Field {
        let local: VectorField = std::array::from_fn(|d| self.to_local(&u[d]));
        divergence_to_pressure(&local, &self.staggered, &self.metrics)
    }

    /// Assembled, masked `Q^T D^T p` per component.
    pub fn gradient_global(&self, p: &Field) -> [Vec<f64>; 3] {
        let g = gradient_from_pressure(p, &self.staggered, &self.metrics);
        std::array::from_fn(|d| {
            let mut v = self.gs.gather(g[d].values());
            v.iter_mut().zip(&self.mask).for_each(|(x, m)| *x *= m);
            v
        })
    }

    /// Nonzeros of column `q` of `Q^T D^T`, as `(3 * global_id + component, value)`
    /// sorted by row.
    pub(crate) fn pressure_column(&self, q: usize) -> Vec<(usize, f64)> {
        let (nv, np) = (self.basis.n(), self.pressure.n());
        let (nvpe, nppe) = (nv * nv * nv, np * np * np);
        let e = q / nppe;
        let ql = q % nppe;
        let qi = [ql % np, (ql / np) % np, ql / (np * np)];
        let interp = self.pressure.interp_v2p();
        let deriv = self.pressure.deriv_v2p();
        let wj = self.metrics.pres_wj[q];
        let rx: [f64; 9] = std::array::from_fn(|m| self.metrics.pres_rx[m][q] * wj);
        let mut out = Vec::with_capacity(3 * nvpe);
        for l in 0..nvpe {
            let li = [l % nv, (l / nv) % nv, l / (nv * nv)];
            let i = [0, 1, 2].map(|a| interp[(qi[a], li[a])]);
            let dd = [0, 1, 2].map(|a| deriv[(qi[a], li[a])]);
            let t = [dd[0] * i[1] * i[2], i[0] * dd[1] * i[2], i[0] * i[1] * dd[2]];
            let g = self.gs.global_id(e * nvpe + l);
            for d in 0..3 {
                let v = rx[d] * t[0] + rx[3 + d] * t[1] + rx[6 + d] * t[2];
                if v != 0.0 {
                    out.push((3 * g + d, v));
                }
            }
        }
        out.sort_by_key(|&(r, _)| r);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
        for (r, v) in out {
            match merged.last_mut() {
                Some((lr, lv)) if *lr == r => *lv += v,
                _ => merged.push((r, v)),
            }
        }
        merged
    }

    /// Weight `mask / mass` of row `3 * g + d` in the pressure operator.
    pub(crate) fn pressure_weight(&self, row: usize) -> f64 {
        let g = row / 3;
        self.mask[g] / self.mass[g]
    }
}

/// Assembled Helmholtz operator `mask Q^T A_local Q mask` on global velocity
/// vectors, extended by the identity on wall nodes so it is SPD everywhere.
pub struct HelmholtzSystem<'a> {
    disc: &'a Discretization,
    coeffs: HelmholtzCoeffs,
    pub(super) element_matrices: OnceLock<Vec<DenseMatrix>>,
}

impl<'a> HelmholtzSystem<'a> {
    pub fn discretization(&self) -> &'a Discretization {
        self.disc
    }

    pub fn coeffs(&self) -> &HelmholtzCoeffs {
        &self.coeffs
    }

    /// Assembled diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        let d = &self.disc;
        let local = helmholtz_diagonal(&self.coeffs, &d.gf, &d.basis);
        let mut g = d.gs.gather(&local);
        g.iter_mut().zip(&d.mask).for_each(|(v, m)| *v = if *m == 0.0 { 1.0 } else { *v });
        g
    }

    /// Applies the element-local operator to a local vector.
    pub fn apply_local(&self, x: &[f64], y: &mut [f64]) {
        axhelm_into(x, &self.coeffs, &self.disc.gf, &self.disc.basis, y);
    }
}

impl LinearOperator for HelmholtzSystem<'_> {
    fn len(&self) -> usize {
        self.disc.num_global()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.disc;
        let masked: Vec<f64> = x.iter().zip(&d.mask).map(|(v, m)| v * m).collect();
        let mut local = vec![0.0; d.gs.num_local()];
        d.gs.scatter(&masked, &mut local);
        let mut w = vec![0.0; local.len()];
        self.apply_local(&local, &mut w);
        let g = d.gs.gather(&w);
        y.par_iter_mut()
            .with_min_len(4096)
            .enumerate()
            .for_each(|(i, yi)| *yi = if d.mask[i] == 0.0 { x[i] } else { g[i] });
    }
}

/// Consistent pressure operator `E = D Q mask B^{-1} Q^T D^T` on pressure
/// vectors. Constants span its null space.
pub struct PressureSystem<'a> {
    disc: &'a Discretization,
}

impl<'a> PressureSystem<'a> {
    pub fn discretization(&self) -> &'a Discretization {
        self.disc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let d = self.disc;
        (0..d.num_pressure())
            .into_par_iter()
            .map(|q| d.pressure_column(q).iter().map(|&(r, v)| d.pressure_weight(r) * v * v).sum())
            .collect()
    }
}

impl LinearOperator for PressureSystem<'_> {
    fn len(&self) -> usize {
        self.disc.num_pressure()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.disc;
        let p = d.pressure_field(x.to_vec());
        let g = d.gradient_global(&p);
        let scaled: [Vec<f64>; 3] =
            std::array::from_fn(|c| g[c].iter().zip(&d.mass).map(|(v, b)| v / b).collect());
        let div = d.divergence(&scaled);
        y.copy_from_slice(div.values());
    }

    fn remove_nullspace(&self, v: &mut [f64]) {
        remove_mean(v);
    }
}

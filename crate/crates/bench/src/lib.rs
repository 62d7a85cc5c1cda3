//! Fixtures shared by the criterion benchmarks.

use semflow::harness::box_counts;
use semflow::{
    build_box_mesh, build_gather_scatter, build_geometric_factors, BoxSpec, GatherScatterMap, GeometricFactors,
    HelmholtzCoeffs, SpectralBasis,
};

/// Smooth non-polynomial data so no kernel sees an exactly representable
/// input.
pub fn sample_values(len: usize) -> Vec<f64> {
    (0..len).map(|i| ((i as f64) * 0.618).sin()).collect()
}

/// Inputs of the matrix-free Helmholtz kernel on a box of `e` elements.
pub struct HelmholtzFixture {
    pub basis: SpectralBasis,
    pub gf: GeometricFactors,
    pub coeffs: HelmholtzCoeffs,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl HelmholtzFixture {
    pub fn new(e: usize, order: usize) -> Self {
        let mesh = build_box_mesh(&BoxSpec::unit(box_counts(e))).expect("box mesh");
        let basis = SpectralBasis::new(order).expect("order in range");
        let gf = build_geometric_factors(&mesh, &basis).expect("valid geometry");
        let u = sample_values(e * basis.n().pow(3));
        Self {
            w: vec![0.0; u.len()],
            basis,
            gf,
            coeffs: HelmholtzCoeffs::scalar(1.0, 1.0).expect("valid coefficients"),
            u,
        }
    }

    pub fn apply(&mut self) {
        semflow::operators::axhelm_into(&self.u, &self.coeffs, &self.gf, &self.basis, &mut self.w);
    }
}

/// Gather-scatter map and a local vector on a box of `e` elements.
pub struct GatherFixture {
    pub gs: GatherScatterMap,
    pub u: Vec<f64>,
}

impl GatherFixture {
    pub fn new(e: usize, order: usize) -> Self {
        let mesh = build_box_mesh(&BoxSpec::unit(box_counts(e))).expect("box mesh");
        let gs = build_gather_scatter(&mesh, order);
        Self {
            u: sample_values(e * (order + 1).pow(3)),
            gs,
        }
    }
}

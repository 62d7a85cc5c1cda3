//! Global continuous numbering of velocity nodes and the gather-scatter
//! (direct stiffness summation) that couples elements.

use rayon::prelude::*;

use crate::field::{Field, Grid};
use crate::mesh::HexMesh;

/// Maps every local velocity node `(element, i, j, k)` to a global id.
///
/// Ids come from integer lattice arithmetic on the structured mesh, so
/// coincident nodes (including across periodic wraps) share an id exactly.
/// Local copies of each global id are kept in ascending local order, which
/// fixes the accumulation order of [`GatherScatterMap::gather`].
#[derive(Debug, Clone)]
pub struct GatherScatterMap {
    n: usize,
    num_elements: usize,
    global: Vec<usize>,
    num_global: usize,
    copies_ptr: Vec<usize>,
    copies: Vec<usize>,
    multiplicity: Vec<f64>,
}

/// Builds the gather-scatter map for order `order` on `mesh`.
pub fn build_gather_scatter(mesh: &HexMesh, order: usize) -> GatherScatterMap {
    assert!(order >= 1, "order must be >= 1");
    let n = order + 1;
    let dims = mesh.lattice_dims(order);
    let num_elements = mesh.num_elements();
    let mut global = Vec::with_capacity(num_elements * n * n * n);
    for e in 0..num_elements {
        let base = mesh.element_index(e).map(|i| i * order);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    global.push(mesh.wrap_lattice([base[0] + i, base[1] + j, base[2] + k], dims));
                }
            }
        }
    }
    let num_global: usize = dims.iter().product();
    let mut counts = vec![0usize; num_global];
    for &g in &global {
        counts[g] += 1;
    }
    let mut copies_ptr = Vec::with_capacity(num_global + 1);
    copies_ptr.push(0);
    for c in &counts {
        copies_ptr.push(copies_ptr.last().unwrap() + c);
    }
    let mut fill = copies_ptr[..num_global].to_vec();
    let mut copies = vec![0; global.len()];
    for (l, &g) in global.iter().enumerate() {
        copies[fill[g]] = l;
        fill[g] += 1;
    }
    let multiplicity = global.iter().map(|&g| counts[g] as f64).collect();
    GatherScatterMap {
        n,
        num_elements,
        global,
        num_global,
        copies_ptr,
        copies,
        multiplicity,
    }
}

impl GatherScatterMap {
    /// Points per direction on the velocity grid.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn num_local(&self) -> usize {
        self.global.len()
    }

    pub fn num_global(&self) -> usize {
        self.num_global
    }

    pub fn global_ids(&self) -> &[usize] {
        &self.global
    }

    pub fn global_id(&self, local: usize) -> usize {
        self.global[local]
    }

    /// Local copies of global id `g`, ascending.
    pub fn copies(&self, g: usize) -> &[usize] {
        &self.copies[self.copies_ptr[g]..self.copies_ptr[g + 1]]
    }

    /// Number of local nodes sharing each local node's global id.
    pub fn multiplicity(&self) -> &[f64] {
        &self.multiplicity
    }

    fn check_local(&self, len: usize) {
        assert_eq!(len, self.global.len(), "local vector length does not match the gather-scatter map");
    }

    /// `Q^T`: sums local copies into a global vector.
    pub fn gather(&self, local: &[f64]) -> Vec<f64> {
        self.check_local(local.len());
        (0..self.num_global)
            .into_par_iter()
            .with_min_len(1024)
            .map(|g| self.copies(g).iter().map(|&l| local[l]).sum())
            .collect()
    }

    /// `Q`: copies global values to every local node.
    pub fn scatter(&self, global: &[f64], local: &mut [f64]) {
        self.check_local(local.len());
        assert_eq!(global.len(), self.num_global, "global vector length mismatch");
        local
            .par_iter_mut()
            .with_min_len(4096)
            .zip(self.global.par_iter())
            .for_each(|(v, &g)| *v = global[g]);
    }

    /// Direct stiffness summation `Q Q^T` in place on a flat local vector.
    pub fn gs_sum_in_place(&self, local: &mut [f64]) {
        let g = self.gather(local);
        self.scatter(&g, local);
    }

    /// Direct stiffness summation of a velocity-grid field.
    pub fn gs_sum(&self, field: &Field) -> Field {
        assert_eq!(field.grid(), Grid::Velocity, "gs_sum needs a velocity-grid field");
        assert_eq!((field.num_elements(), field.n()), (self.num_elements, self.n), "field shape mismatch");
        let mut out = field.clone();
        self.gs_sum_in_place(out.values_mut());
        out
    }
}

//! Subdomain and coarse-space data of the assembled systems for the Schwarz
//! preconditioner.

use rayon::prelude::*;

use super::helmholtz::element_matrix;
use super::system::{Discretization, HelmholtzSystem, PressureSystem};
use crate::krylov::SchwarzProblem;
use crate::linalg::{CsrMatrix, DenseMatrix};

/// Trilinear vertex functions at a reference point, in corner order.
fn hat_values(r: [f64; 3]) -> [f64; 8] {
    std::array::from_fn(|c| {
        (0..3)
            .map(|a| {
                let s = if (c >> a) & 1 == 1 { 1.0 } else { -1.0 };
                0.5 * (1.0 + s * r[a])
            })
            .product()
    })
}

/// Local tensor indices within `depth` layers of `face` (`n` points per
/// direction).
fn face_layer(n: usize, face: usize, depth: usize) -> impl Iterator<Item = usize> {
    let axis = face / 2;
    let depth = depth.min(n);
    let range = if face % 2 == 0 { 0..depth } else { n - depth..n };
    (0..n * n * n).filter(move |&l| {
        let idx = [l % n, (l / n) % n, l / (n * n)][axis];
        range.contains(&idx)
    })
}

impl Discretization {
    fn vertex_is_wall(&self, v: usize) -> bool {
        let dims = self.mesh.lattice_dims(1);
        let l = [v % dims[0], (v / dims[0]) % dims[1], v / (dims[0] * dims[1])];
        let periodic = self.mesh.periodic();
        (0..3).any(|d| !periodic[d] && (l[d] == 0 || l[d] + 1 == dims[d]))
    }
}

impl HelmholtzSystem<'_> {
    fn element_matrices(&self) -> &[DenseMatrix] {
        self.element_matrices.get_or_init(|| {
            let d = self.discretization();
            (0..d.num_elements())
                .into_par_iter()
                .map(|e| element_matrix(self.coeffs(), &d.gf, &d.basis, e))
                .collect()
        })
    }
}

impl SchwarzProblem for HelmholtzSystem<'_> {
    fn num_elements(&self) -> usize {
        self.discretization().num_elements()
    }

    fn face_neighbor(&self, e: usize, face: usize) -> Option<usize> {
        self.discretization().mesh.face_neighbor(e, face)
    }

    fn element_dofs(&self, e: usize) -> Vec<usize> {
        let d = self.discretization();
        let npe = d.basis.n().pow(3);
        let mut dofs: Vec<usize> = (e * npe..(e + 1) * npe)
            .map(|l| d.gs.global_id(l))
            .filter(|&g| d.mask[g] != 0.0)
            .collect();
        dofs.sort_unstable();
        dofs.dedup();
        dofs
    }

    fn face_layer_dofs(&self, e: usize, face: usize, depth: usize) -> Vec<usize> {
        let d = self.discretization();
        let n = d.basis.n();
        // index 0 along the normal is shared with the neighbor
        let mut dofs: Vec<usize> = face_layer(n, face, depth + 1)
            .map(|l| d.gs.global_id(e * n * n * n + l))
            .filter(|&g| d.mask[g] != 0.0)
            .collect();
        dofs.sort_unstable();
        dofs.dedup();
        dofs
    }

    fn is_free(&self, dof: usize) -> bool {
        self.discretization().mask[dof] != 0.0
    }

    fn principal_block(&self, dofs: &[usize]) -> DenseMatrix {
        let d = self.discretization();
        let npe = d.basis.n().pow(3);
        let mats = self.element_matrices();
        let mut elements: Vec<usize> = dofs
            .iter()
            .flat_map(|&g| d.gs.copies(g).iter().map(move |&l| l / npe))
            .collect();
        elements.sort_unstable();
        elements.dedup();
        let mut block = DenseMatrix::zeros(dofs.len(), dofs.len());
        for e in elements {
            let local: Vec<(usize, usize)> = (0..npe)
                .filter_map(|a| dofs.binary_search(&d.gs.global_id(e * npe + a)).ok().map(|p| (a, p)))
                .collect();
            let k = &mats[e];
            for &(a, pa) in &local {
                for &(b, pb) in &local {
                    block[(pa, pb)] += k[(a, b)];
                }
            }
        }
        block
    }

    fn coarse_basis(&self) -> Option<CsrMatrix> {
        let d = self.discretization();
        let n = d.basis.n();
        let npe = n * n * n;
        let (ids, nv) = d.mesh.vertex_numbering();
        let mut col_of = vec![None; nv];
        let mut cols = 0;
        for (v, c) in col_of.iter_mut().enumerate() {
            if !d.vertex_is_wall(v) {
                *c = Some(cols);
                cols += 1;
            }
        }
        if cols == 0 {
            return None;
        }
        let x = d.basis.nodes();
        let mut trip = Vec::new();
        for g in 0..d.num_global() {
            if d.mask[g] == 0.0 {
                continue;
            }
            let l = d.gs.copies(g)[0];
            let (e, ll) = (l / npe, l % npe);
            let r = [x[ll % n], x[(ll / n) % n], x[ll / (n * n)]];
            for (c, h) in hat_values(r).into_iter().enumerate() {
                if let Some(col) = col_of[ids[e][c]] {
                    trip.push((g, col, h));
                }
            }
        }
        Some(CsrMatrix::from_triplets(d.num_global(), cols, trip))
    }
}

impl SchwarzProblem for PressureSystem<'_> {
    fn num_elements(&self) -> usize {
        self.discretization().num_elements()
    }

    fn face_neighbor(&self, e: usize, face: usize) -> Option<usize> {
        self.discretization().mesh.face_neighbor(e, face)
    }

    fn element_dofs(&self, e: usize) -> Vec<usize> {
        let m = self.discretization().pressure.n().pow(3);
        (e * m..(e + 1) * m).collect()
    }

    fn face_layer_dofs(&self, e: usize, face: usize, depth: usize) -> Vec<usize> {
        let np = self.discretization().pressure.n();
        let m = np * np * np;
        face_layer(np, face, depth).map(|l| e * m + l).collect()
    }

    fn is_free(&self, _dof: usize) -> bool {
        true
    }

    /// `G_S^T W G_S` with `G = Q^T D^T` restricted to the columns in `dofs`
    /// and `W = mask / B`: the exact principal submatrix of `E`.
    fn principal_block(&self, dofs: &[usize]) -> DenseMatrix {
        let d = self.discretization();
        let mut trip: Vec<(usize, usize, f64)> = dofs
            .par_iter()
            .enumerate()
            .flat_map_iter(|(a, &q)| d.pressure_column(q).into_iter().map(move |(r, v)| (r, a, v)))
            .collect();
        trip.sort_unstable_by_key(|&(r, a, _)| (r, a));
        let mut block = DenseMatrix::zeros(dofs.len(), dofs.len());
        for group in trip.chunk_by(|x, y| x.0 == y.0) {
            let w = d.pressure_weight(group[0].0);
            if w == 0.0 {
                continue;
            }
            for &(_, a, va) in group {
                let wa = w * va;
                for &(_, b, vb) in group {
                    block[(a, b)] += wa * vb;
                }
            }
        }
        block
    }

    fn coarse_basis(&self) -> Option<CsrMatrix> {
        let d = self.discretization();
        let np = d.pressure.n();
        let m = np * np * np;
        let (ids, nv) = d.mesh.vertex_numbering();
        // the last vertex is dropped so the coarse space excludes constants
        let cols = nv - 1;
        if cols == 0 {
            return None;
        }
        let x = d.pressure.nodes();
        let ids = &ids;
        let trip = (0..d.num_pressure()).flat_map(|q| {
            let (e, l) = (q / m, q % m);
            let r = [x[l % np], x[(l / np) % np], x[l / (np * np)]];
            hat_values(r)
                .into_iter()
                .enumerate()
                .filter(move |&(c, _)| ids[e][c] < cols)
                .map(move |(c, h)| (q, ids[e][c], h))
                .collect::<Vec<_>>()
        });
        Some(CsrMatrix::from_triplets(d.num_pressure(), cols, trip))
    }

    fn has_constant_nullspace(&self) -> bool {
        true
    }
}

//! Additive overlapping Schwarz preconditioner with a vertex-based coarse
//! space solved by XXT.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::xxt::{xxt_factor, XxtFactor};
use super::Preconditioner;
use crate::error::{Result, SemError};
use crate::linalg::{CsrMatrix, DenseMatrix, LinearOperator};
use crate::mesh::{Partition, FACES};

/// What the preconditioner needs to know about the operator it approximates.
pub trait SchwarzProblem: LinearOperator {
    fn num_elements(&self) -> usize;

    fn face_neighbor(&self, e: usize, face: usize) -> Option<usize>;

    /// Free unknowns attached to element `e`.
    fn element_dofs(&self, e: usize) -> Vec<usize>;

    /// Free unknowns of element `e` lying within `depth` node layers of its
    /// face `face`. Layers are counted beyond any nodes shared with the
    /// neighbor across that face.
    fn face_layer_dofs(&self, e: usize, face: usize, depth: usize) -> Vec<usize>;

    /// Unknowns constrained by the operator (identity rows); the preconditioner
    /// passes them through unchanged.
    fn is_free(&self, dof: usize) -> bool;

    /// Dense principal submatrix of the operator on `dofs`.
    fn principal_block(&self, dofs: &[usize]) -> DenseMatrix;

    /// Coarse embedding `Phi` (unknowns x coarse vertices), or `None` when no
    /// coarse space is available.
    fn coarse_basis(&self) -> Option<CsrMatrix>;

    /// Whether constants span the operator's null space.
    fn has_constant_nullspace(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchwarzConfig {
    /// Node layers taken from each face neighbor outside the subdomain.
    #[serde(default = "default_overlap")]
    pub overlap_layers: usize,
    #[serde(default = "default_coarse")]
    pub coarse: bool,
}

fn default_overlap() -> usize {
    1
}

fn default_coarse() -> bool {
    true
}

impl Default for SchwarzConfig {
    fn default() -> Self {
        Self {
            overlap_layers: default_overlap(),
            coarse: default_coarse(),
        }
    }
}

struct Subdomain {
    dofs: Vec<usize>,
    sqrt_weights: Vec<f64>,
    factor: Cholesky<f64, Dyn>,
}

struct CoarseSpace {
    phi: CsrMatrix,
    phi_t: CsrMatrix,
    factor: XxtFactor,
}

/// `M^{-1} r = Phi A_0^{-1} Phi^T r + sum_k R_k^T W_k^{1/2} A_k^{-1} W_k^{1/2} R_k r`,
/// with `W_k = 1 / (number of subdomains holding each unknown)`.
pub struct SchwarzPreconditioner {
    len: usize,
    free: Vec<bool>,
    subdomains: Vec<Subdomain>,
    coarse: Option<CoarseSpace>,
}

/// Builds one subdomain per rank of `partition`.
pub fn build_schwarz<P: SchwarzProblem + ?Sized>(
    problem: &P,
    partition: &Partition,
    cfg: &SchwarzConfig,
) -> Result<SchwarzPreconditioner> {
    let len = problem.len();
    assert_eq!(partition.owners().len(), problem.num_elements(), "partition does not match the mesh");
    let free: Vec<bool> = (0..len).map(|d| problem.is_free(d)).collect();
    let num_free = free.iter().filter(|&&f| f).count();
    let dof_sets: Vec<Vec<usize>> = (0..partition.ranks())
        .map(|rank| {
            let mut dofs = Vec::new();
            for e in partition.elements_of(rank) {
                dofs.extend(problem.element_dofs(e));
                if cfg.overlap_layers == 0 {
                    continue;
                }
                for face in 0..FACES {
                    if let Some(nb) = problem.face_neighbor(e, face) {
                        if partition.owner(nb) != rank {
                            dofs.extend(problem.face_layer_dofs(nb, face ^ 1, cfg.overlap_layers));
                        }
                    }
                }
            }
            dofs.sort_unstable();
            dofs.dedup();
            dofs
        })
        .collect();
    let mut count = vec![0usize; len];
    for set in &dof_sets {
        for &d in set {
            count[d] += 1;
        }
    }
    let subdomains = dof_sets
        .into_par_iter()
        .enumerate()
        .map(|(k, dofs)| {
            let mut block = problem.principal_block(&dofs);
            let m = dofs.len();
            if problem.has_constant_nullspace() && m == num_free {
                // whole-domain block: fix the constant mode
                let shift = (0..m).map(|i| block[(i, i)]).sum::<f64>() / (m * m) as f64;
                for i in 0..m {
                    for j in 0..m {
                        block[(i, j)] += shift;
                    }
                }
            }
            let a = DMatrix::from_row_slice(m, m, block.as_slice());
            let factor = a.cholesky().ok_or(SemError::SingularLocalBlock { subdomain: k })?;
            let sqrt_weights = dofs.iter().map(|&d| (1.0 / count[d] as f64).sqrt()).collect();
            Ok(Subdomain {
                dofs,
                sqrt_weights,
                factor,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let coarse = if cfg.coarse {
        problem.coarse_basis().map(|phi| build_coarse(problem, phi)).transpose()?
    } else {
        None
    };
    Ok(SchwarzPreconditioner {
        len,
        free,
        subdomains,
        coarse,
    })
}

fn build_coarse<P: SchwarzProblem + ?Sized>(problem: &P, phi: CsrMatrix) -> Result<CoarseSpace> {
    let phi_t = phi.transpose();
    let a0 = galerkin_coarse(problem, &phi_t);
    let factor = xxt_factor(&a0)?;
    Ok(CoarseSpace { phi, phi_t, factor })
}

/// Symmetrized `A_0 = Phi^T A Phi` of the problem's coarse space, formed with
/// one operator application per coarse vertex.
pub fn coarse_operator<P: SchwarzProblem + ?Sized>(problem: &P) -> Option<CsrMatrix> {
    problem.coarse_basis().map(|phi| galerkin_coarse(problem, &phi.transpose()))
}

fn galerkin_coarse<P: SchwarzProblem + ?Sized>(problem: &P, phi_t: &CsrMatrix) -> CsrMatrix {
    let n0 = phi_t.nrows();
    let len = problem.len();
    let columns: Vec<Vec<(usize, usize, f64)>> = (0..n0)
        .into_par_iter()
        .map(|c| {
            let mut col = vec![0.0; len];
            for (i, v) in phi_t.row(c) {
                col[i] = v;
            }
            let mut a_col = vec![0.0; len];
            problem.apply(&col, &mut a_col);
            let mut proj = vec![0.0; n0];
            phi_t.spmv(&a_col, &mut proj);
            proj.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(r, &v)| (r, c, v)).collect()
        })
        .collect();
    let a0 = CsrMatrix::from_triplets(n0, n0, columns.into_iter().flatten());
    let at = a0.transpose();
    CsrMatrix::from_triplets(
        n0,
        n0,
        (0..n0).flat_map(|i| a0.row(i).chain(at.row(i)).map(move |(j, v)| (i, j, 0.5 * v)).collect::<Vec<_>>()),
    )
}

impl SchwarzPreconditioner {
    pub fn num_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    pub fn subdomain_dofs(&self, k: usize) -> &[usize] {
        &self.subdomains[k].dofs
    }

    /// Sum of the partition-of-unity weights at every unknown (1 where free).
    pub fn weight_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.len];
        for sd in &self.subdomains {
            for (&d, w) in sd.dofs.iter().zip(&sd.sqrt_weights) {
                s[d] += w * w;
            }
        }
        s
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.factor.dim())
    }

    /// Nonzeros of the coarse factor `X`.
    pub fn coarse_nnz(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.factor.nnz())
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.len, "residual length does not match the preconditioner");
        let locals: Vec<Vec<f64>> = self
            .subdomains
            .par_iter()
            .map(|sd| {
                let rhs = DVector::from_iterator(
                    sd.dofs.len(),
                    sd.dofs.iter().zip(&sd.sqrt_weights).map(|(&d, w)| w * r[d]),
                );
                let x = sd.factor.solve(&rhs);
                x.iter().zip(&sd.sqrt_weights).map(|(v, w)| v * w).collect()
            })
            .collect();
        for (zi, (ri, &f)) in z.iter_mut().zip(r.iter().zip(&self.free)) {
            *zi = if f { 0.0 } else { *ri };
        }
        for (sd, x) in self.subdomains.iter().zip(locals) {
            for (&d, v) in sd.dofs.iter().zip(x) {
                z[d] += v;
            }
        }
        if let Some(c) = &self.coarse {
            let mut rc = vec![0.0; c.phi.ncols()];
            c.phi_t.spmv(r, &mut rc);
            let yc = c.factor.solve(&rc);
            let mut fine = vec![0.0; self.len];
            c.phi.spmv(&yc, &mut fine);
            for (zi, v) in z.iter_mut().zip(fine) {
                *zi += v;
            }
        }
    }
}

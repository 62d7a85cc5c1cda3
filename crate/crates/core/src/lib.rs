//! Matrix-free spectral-element solver for the incompressible Navier-Stokes
//! equations on structured hexahedral meshes.
//!
//! Velocity lives on Gauss-Lobatto-Legendre points of order `N`, pressure on
//! Gauss-Legendre points of order `N - 2`. Time stepping uses BDF/EXT with a
//! pressure-correction splitting; the linear systems are solved with PCG,
//! preconditioned by Jacobi or additive overlapping Schwarz with an XXT
//! coarse solve.

pub mod basis;
pub mod comm;
pub mod error;
pub mod field;
pub mod geometry;
pub mod krylov;
pub mod gs;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod stepper;
pub mod validate;

pub use comm::{analytic_merge_factors, count_cut_volume, virtual_node_sweep, CommGraph, CutVolume, Decomposition, VirtualNodeReport};
pub use basis::{build_gll_basis, build_pressure_basis, PressureBasis, SpectralBasis};
pub use error::{Result, SemError};
pub use field::{Field, Grid, VectorField};
pub use geometry::{build_geometric_factors, GeometricFactors, MetricTerms};
pub use harness::{bench_kernel, footprint, sweep, BenchConfig, BenchResult, FastMemoryModel, Kernel};
pub use gs::{build_gather_scatter, GatherScatterMap};
pub use linalg::{CsrMatrix, DenseMatrix, LinearOperator};
pub use mesh::{build_box_mesh, partition_rcb, BoxSpec, HexMesh, Partition};
pub use operators::{Discretization, HelmholtzCoeffs};
pub use stepper::{FlowSolver, FlowState, Forcing, SolverSettings, StepReport, TimeScheme};

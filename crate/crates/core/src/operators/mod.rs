//! Matrix-free element operators and the assembled systems built on them.

mod advection;
mod helmholtz;
mod pressure;
mod subdomains;
mod system;
pub(crate) mod tensor;

pub use advection::{advect, grad_velocity};
pub use helmholtz::{axhelm, axhelm_flops, axhelm_into, element_matrix, helmholtz_diagonal, Coefficient, HelmholtzCoeffs};
pub use pressure::{divergence_to_pressure, gradient_from_pressure, StaggeredOperators};
pub use system::{Discretization, HelmholtzSystem, PressureSystem};

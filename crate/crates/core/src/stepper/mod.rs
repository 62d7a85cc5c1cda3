//! BDF/EXT pressure-correction time stepping for incompressible flow.

mod io;
mod scheme;
mod solver;
mod state;
#[cfg(test)]
mod tests;

pub use io::{Checkpoint, TelemetryWriter, TELEMETRY_HEADER};
pub use scheme::{bdf_ext_coefficients, TimeScheme};
pub use solver::{assemble_fn, correct_velocity, FlowSolver, SolverSettings, StepReport};
pub use state::{Forcing, FlowState, GlobalVector};

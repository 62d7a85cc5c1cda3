use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::scheme::TimeScheme;
use super::state::{convection_term, FlowState, GlobalVector};
use crate::error::{Result, SemError};
use crate::field::Field;
use crate::krylov::{
    build_schwarz, pcg, solve_projected, IdentityPreconditioner, JacobiPreconditioner, KrylovConfig, Preconditioner,
    PreconditionerKind, ProjectionHistory, SchwarzConfig, SolveStats,
};
use crate::linalg::{norm2, LinearOperator};
use crate::mesh::Partition;
use crate::operators::{Discretization, HelmholtzCoeffs, HelmholtzSystem};

/// Linear-solver settings of a flow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub velocity: KrylovConfig,
    pub pressure: KrylovConfig,
    #[serde(default)]
    pub schwarz: SchwarzConfig,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            velocity: KrylovConfig {
                tolerance: 1e-8,
                max_iterations: 1000,
                preconditioner: PreconditionerKind::Jacobi,
                projection_depth: 0,
            },
            pressure: KrylovConfig {
                tolerance: 1e-6,
                max_iterations: 1000,
                preconditioner: PreconditionerKind::Schwarz,
                projection_depth: 0,
            },
            schwarz: SchwarzConfig::default(),
        }
    }
}

/// Per-step solver telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    /// Summed over the three velocity components.
    pub iterations_v: usize,
    pub iterations_p: usize,
    /// Largest final relative residual of the velocity solves.
    pub residual_v: f64,
    pub residual_p: f64,
    /// `||D u^n||_2` after correction.
    pub divergence: f64,
    pub cfl: f64,
    pub wall_s: f64,
}

/// Mass-weighted explicit terms `F = -sum_j a_j N(u^{n-j}) + B f(t^n)`.
pub fn assemble_fn(disc: &Discretization, state: &FlowState, scheme: &TimeScheme) -> Result<GlobalVector> {
    let k = scheme.order();
    if state.velocity.len() < k || state.convection.len() < k {
        return Err(SemError::Startup(format!(
            "order {k} needs {k} velocity levels, {} available",
            state.velocity.len()
        )));
    }
    let mut f = state.forcing.assembled(disc, state.time + scheme.dt());
    for (j, a) in scheme.ext().iter().enumerate() {
        for d in 0..3 {
            crate::linalg::axpy(-a, &state.convection[j][d], &mut f[d]);
        }
    }
    Ok(f)
}

/// Velocity update `u^n = u* + (dt / b0) mask B^{-1} Q^T D^T dp`.
pub fn correct_velocity(disc: &Discretization, u_star: &GlobalVector, dp: &Field, scheme: &TimeScheme) -> GlobalVector {
    let g = disc.gradient_global(dp);
    let s = scheme.dt() / scheme.bdf()[0];
    std::array::from_fn(|d| {
        u_star[d]
            .iter()
            .zip(&g[d])
            .zip(&disc.mass)
            .map(|((u, gv), m)| u + s * gv / m)
            .collect()
    })
}

/// Pressure-correction time stepper.
pub struct FlowSolver<'a> {
    disc: &'a Discretization,
    scheme: TimeScheme,
    settings: SolverSettings,
    partition: Partition,
    pressure_pc: Box<dyn Preconditioner + Send>,
    velocity_pc: HashMap<usize, Box<dyn Preconditioner + Send>>,
    pressure_history: ProjectionHistory,
    velocity_history: Vec<ProjectionHistory>,
    history_order: usize,
}

impl<'a> FlowSolver<'a> {
    /// Builds the solver; the pressure preconditioner is set up here. The
    /// partition defines the Schwarz subdomains.
    pub fn new(disc: &'a Discretization, scheme: TimeScheme, settings: SolverSettings, partition: Partition) -> Result<Self> {
        settings.velocity.validate()?;
        settings.pressure.validate()?;
        let p = disc.pressure_system();
        let pressure_pc: Box<dyn Preconditioner + Send> = match settings.pressure.preconditioner {
            PreconditionerKind::None => Box::new(IdentityPreconditioner),
            PreconditionerKind::Jacobi => Box::new(JacobiPreconditioner::new(&p.diagonal())?),
            PreconditionerKind::Schwarz => Box::new(build_schwarz(&p, &partition, &settings.schwarz)?),
        };
        let depth_p = settings.pressure.projection_depth;
        let depth_v = settings.velocity.projection_depth;
        Ok(Self {
            disc,
            scheme,
            settings,
            partition,
            pressure_pc,
            velocity_pc: HashMap::new(),
            pressure_history: ProjectionHistory::new(depth_p),
            velocity_history: (0..3).map(|_| ProjectionHistory::new(depth_v)).collect(),
            history_order: 0,
        })
    }

    pub fn scheme(&self) -> &TimeScheme {
        &self.scheme
    }

    pub fn discretization(&self) -> &'a Discretization {
        self.disc
    }

    fn helmholtz(&self, state: &FlowState, scheme: &TimeScheme) -> Result<HelmholtzSystem<'a>> {
        let coeffs = HelmholtzCoeffs::scalar(1.0 / state.re, scheme.bdf()[0] / scheme.dt())?;
        Ok(self.disc.helmholtz(coeffs))
    }

    fn velocity_preconditioner(&mut self, h: &HelmholtzSystem<'_>, order: usize) -> Result<&dyn Preconditioner> {
        if !self.velocity_pc.contains_key(&order) {
            let pc: Box<dyn Preconditioner + Send> = match self.settings.velocity.preconditioner {
                PreconditionerKind::None => Box::new(IdentityPreconditioner),
                PreconditionerKind::Jacobi => Box::new(JacobiPreconditioner::new(&h.diagonal())?),
                PreconditionerKind::Schwarz => Box::new(build_schwarz(h, &self.partition, &self.settings.schwarz)?),
            };
            self.velocity_pc.insert(order, pc);
        }
        Ok(self.velocity_pc[&order].as_ref())
    }

    /// Helmholtz solves for the intermediate velocity `u*`.
    pub fn solve_velocity_star(&mut self, state: &FlowState, scheme: &TimeScheme) -> Result<(GlobalVector, Vec<SolveStats>)> {
        let disc = self.disc;
        let f = assemble_fn(disc, state, scheme)?;
        let grad_p = disc.gradient_global(&state.pressure);
        let h = self.helmholtz(state, scheme)?;
        if self.history_order != scheme.order() {
            self.velocity_history.iter_mut().for_each(ProjectionHistory::clear);
            self.history_order = scheme.order();
        }
        let cfg = self.settings.velocity.clone();
        let dt = scheme.dt();
        let mut u_star: Vec<Vec<f64>> = Vec::with_capacity(3);
        let mut stats = Vec::with_capacity(3);
        for d in 0..3 {
            let mut rhs = f[d].clone();
            for (j, b) in scheme.bdf()[1..].iter().enumerate() {
                let u = &state.velocity[j][d];
                for ((r, m), v) in rhs.iter_mut().zip(&disc.mass).zip(u) {
                    *r -= b / dt * m * v;
                }
            }
            for ((r, g), mask) in rhs.iter_mut().zip(&grad_p[d]).zip(&disc.mask) {
                *r = (*r + g) * mask;
            }
            let label = format!("velocity-{}", ["x", "y", "z"][d]);
            let order = scheme.order();
            let mut history = std::mem::take(&mut self.velocity_history[d]);
            let pc = self.velocity_preconditioner(&h, order)?;
            let (x, s) = if cfg.projection_depth > 0 {
                solve_projected(&h, &rhs, pc, &cfg, &mut history, &label)?
            } else {
                let mut x: Vec<f64> = state.velocity[0][d].iter().zip(&disc.mask).map(|(u, m)| u * m).collect();
                let s = pcg(&h, &rhs, &mut x, pc, &cfg, &label)?;
                (x, s)
            };
            self.velocity_history[d] = history;
            u_star.push(x);
            stats.push(s);
        }
        let u_star: GlobalVector = u_star.try_into().expect("three components");
        Ok((u_star, stats))
    }

    /// Consistent Poisson solve `E dp = -(b0 / dt) D u*` with zero mean.
    pub fn solve_pressure_update(&mut self, u_star: &GlobalVector, scheme: &TimeScheme) -> Result<(Field, SolveStats)> {
        let disc = self.disc;
        let e = disc.pressure_system();
        let mut rhs = disc.divergence(u_star).into_values();
        let s = -scheme.bdf()[0] / scheme.dt();
        rhs.iter_mut().for_each(|v| *v *= s);
        // the sum is the net boundary flux of u*, zero up to roundoff
        let sum: f64 = rhs.iter().sum();
        let umax = u_star.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let volume: f64 = disc.mass.iter().sum();
        if sum.abs() > 1e-9 * s.abs() * umax * volume.powf(2.0 / 3.0) {
            return Err(SemError::IncompatibleRhs {
                mean: sum / rhs.len() as f64,
            });
        }
        e.remove_nullspace(&mut rhs);
        let cfg = &self.settings.pressure;
        let (dp, stats) = if cfg.projection_depth > 0 {
            solve_projected(&e, &rhs, self.pressure_pc.as_ref(), cfg, &mut self.pressure_history, "pressure")?
        } else {
            let mut x = vec![0.0; rhs.len()];
            let stats = pcg(&e, &rhs, &mut x, self.pressure_pc.as_ref(), cfg, "pressure")?;
            (x, stats)
        };
        Ok((disc.pressure_field(dp), stats))
    }

    /// Applies the correction and rotates the history.
    pub fn correct_fields(&self, state: &mut FlowState, u_star: &GlobalVector, dp: &Field, scheme: &TimeScheme) -> GlobalVector {
        let u = correct_velocity(self.disc, u_star, dp, scheme);
        state.pressure.axpy(1.0, dp);
        let conv = convection_term(self.disc, &u, state.advection);
        state.velocity.push_front(u.clone());
        state.convection.push_front(conv);
        state.velocity.truncate(self.scheme.order());
        state.convection.truncate(self.scheme.order());
        state.step += 1;
        state.time += scheme.dt();
        u
    }

    /// One full step: explicit terms, Helmholtz, pressure, correction.
    pub fn advance(&mut self, state: &mut FlowState) -> Result<StepReport> {
        let start = Instant::now();
        let scheme = self.scheme.ramped(state.velocity.len());
        let (u_star, vstats) = self.solve_velocity_star(state, &scheme)?;
        let (dp, pstats) = self.solve_pressure_update(&u_star, &scheme)?;
        let u = self.correct_fields(state, &u_star, &dp, &scheme);
        let divergence = norm2(self.disc.divergence(&u).values());
        Ok(StepReport {
            step: state.step,
            time: state.time,
            iterations_v: vstats.iter().map(|s| s.iterations).sum(),
            iterations_p: pstats.iterations,
            residual_v: vstats.iter().map(SolveStats::final_residual).fold(0.0, f64::max),
            residual_p: pstats.final_residual(),
            divergence,
            cfl: self.cfl(&u),
            wall_s: start.elapsed().as_secs_f64(),
        })
    }

    /// `dt * max_d max|u_d| N^2 / h_d`.
    pub fn cfl(&self, u: &GlobalVector) -> f64 {
        let spec = self.disc.mesh.spec();
        let extents = spec.extents();
        let n2 = (self.disc.order() * self.disc.order()) as f64;
        (0..3)
            .map(|d| {
                let h = extents[d] / spec.counts[d] as f64;
                let umax = u[d].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                umax * n2 / h
            })
            .fold(0.0, f64::max)
            * self.scheme.dt()
    }
}

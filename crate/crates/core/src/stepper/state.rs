use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use crate::field::Field;
use crate::operators::{advect, Discretization};

/// Velocity as three assembled (global) vectors.
pub type GlobalVector = [Vec<f64>; 3];

/// Body force per unit mass.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Constant([f64; 3]),
    /// `f(x, t)`.
    Function(Arc<dyn Fn([f64; 3], f64) -> [f64; 3] + Send + Sync>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Constant(v) => write!(f, "Constant({v:?})"),
            Forcing::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Forcing {
    /// Assembled `B f(t)` per component.
    pub fn assembled(&self, disc: &Discretization, t: f64) -> GlobalVector {
        match self {
            Forcing::Zero => std::array::from_fn(|_| vec![0.0; disc.num_global()]),
            Forcing::Constant(c) => std::array::from_fn(|d| disc.mass.iter().map(|m| m * c[d]).collect()),
            Forcing::Function(f) => {
                let nodal: Vec<[f64; 3]> = (0..disc.num_global())
                    .map(|g| {
                        let l = disc.gs.copies(g)[0];
                        f([0, 1, 2].map(|d| disc.coords[d].values()[l]), t)
                    })
                    .collect();
                std::array::from_fn(|d| nodal.iter().zip(&disc.mass).map(|(v, m)| v[d] * m).collect())
            }
        }
    }
}

/// Solution history of the flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub re: f64,
    pub forcing: Forcing,
    pub advection: bool,
    pub step: usize,
    pub time: f64,
    /// `u^{n-1}, u^{n-2}, ...`, newest first.
    pub velocity: VecDeque<GlobalVector>,
    /// Assembled mass-weighted advection terms aligned with `velocity`.
    pub convection: VecDeque<GlobalVector>,
    /// `p^{n-1}`.
    pub pressure: Field,
}

impl FlowState {
    /// State at rest with zero pressure.
    pub fn at_rest(disc: &Discretization, re: f64, forcing: Forcing) -> Self {
        let zero: GlobalVector = std::array::from_fn(|_| vec![0.0; disc.num_global()]);
        Self::from_history(disc, re, forcing, true, 0.0, vec![zero], disc.pressure_field(vec![0.0; disc.num_pressure()]))
    }

    /// State from explicit velocity levels (newest first, at `time`,
    /// `time - dt`, ...) and the matching pressure.
    pub fn from_history(
        disc: &Discretization,
        re: f64,
        forcing: Forcing,
        advection: bool,
        time: f64,
        velocity: Vec<GlobalVector>,
        pressure: Field,
    ) -> Self {
        assert!(!velocity.is_empty(), "at least one velocity level is required");
        let convection = velocity
            .iter()
            .map(|u| convection_term(disc, u, advection))
            .collect();
        Self {
            re,
            forcing,
            advection,
            step: 0,
            time,
            velocity: velocity.into(),
            convection,
            pressure,
        }
    }

    pub fn latest_velocity(&self) -> &GlobalVector {
        &self.velocity[0]
    }

    /// Kinetic energy `0.5 u^T B u`.
    pub fn kinetic_energy(&self, disc: &Discretization) -> f64 {
        let u = self.latest_velocity();
        0.5 * (0..3)
            .map(|d| u[d].iter().zip(&disc.mass).map(|(v, m)| m * v * v).sum::<f64>())
            .sum::<f64>()
    }
}

/// Assembled `Q^T (bm * (u . grad) u)`, or zeros without advection.
pub(crate) fn convection_term(disc: &Discretization, u: &GlobalVector, enabled: bool) -> GlobalVector {
    if !enabled {
        return std::array::from_fn(|_| vec![0.0; disc.num_global()]);
    }
    let local: [Field; 3] = std::array::from_fn(|d| disc.to_local(&u[d]));
    let n = advect(&local, &local, &disc.gf, &disc.metrics, &disc.basis);
    std::array::from_fn(|d| disc.gs.gather(n[d].values()))
}

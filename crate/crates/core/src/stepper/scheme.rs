use crate::error::{config_err, Result};

/// Uniform-step BDF`k` derivative weights `b_0..b_k` and EXT`k` extrapolation
/// weights `a_1..a_k`.
pub fn bdf_ext_coefficients(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match order {
        1 => Ok((vec![1.0, -1.0], vec![1.0])),
        2 => Ok((vec![1.5, -2.0, 0.5], vec![2.0, -1.0])),
        3 => Ok((vec![11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0], vec![3.0, -3.0, 1.0])),
        k => Err(config_err("order", format!("time order {k} is not in 1..=3"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeScheme {
    order: usize,
    dt: f64,
    b: Vec<f64>,
    a: Vec<f64>,
}

impl TimeScheme {
    pub fn new(order: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config_err("dt", format!("{dt} must be positive")));
        }
        let (b, a) = bdf_ext_coefficients(order)?;
        Ok(Self { order, dt, b, a })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn bdf(&self) -> &[f64] {
        &self.b
    }

    pub fn ext(&self) -> &[f64] {
        &self.a
    }

    /// Scheme of order `min(order, available)` with the same step.
    pub fn ramped(&self, available: usize) -> Self {
        let k = self.order.min(available.max(1));
        Self::new(k, self.dt).expect("orders 1..=3 are valid")
    }
}

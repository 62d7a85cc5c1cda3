//! Self-check suite run by `semflow validate`, plus the manufactured flow
//! used for temporal-order studies.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::SpectralBasis;
use crate::error::Result;
use crate::geometry::{build_geometric_factors, GeometricFactors};
use crate::krylov::{xxt_factor, PreconditionerKind};
use crate::linalg::{norm2, CsrMatrix};
use crate::mesh::{build_box_mesh, BoxSpec, Partition};
use crate::operators::{axhelm_into, Discretization, HelmholtzCoeffs};
use crate::stepper::{FlowSolver, FlowState, Forcing, GlobalVector, SolverSettings, TimeScheme};

/// Signature of a matrix-free Helmholtz kernel, so the suite can be pointed
/// at a modified kernel.
pub type AxhelmKernel = dyn Fn(&[f64], &HelmholtzCoeffs, &GeometricFactors, &SpectralBasis, &mut [f64]) + Sync;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Runs every suite against the library kernel.
pub fn run_validate() -> Vec<SuiteResult> {
    run_validate_with(&axhelm_into)
}

pub fn run_validate_with(axhelm: &AxhelmKernel) -> Vec<SuiteResult> {
    let suites: Vec<(&'static str, Box<dyn Fn() -> Result<(bool, String)> + '_>)> = vec![
        ("basis exactness", Box::new(check_basis)),
        ("axhelm dense oracle", Box::new(move || check_axhelm(axhelm))),
        ("xxt oracle", Box::new(check_xxt)),
        ("divergence bound", Box::new(check_divergence)),
        ("temporal order", Box::new(check_temporal_order)),
    ];
    suites
        .into_iter()
        .map(|(name, run)| {
            let t = Instant::now();
            let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
            SuiteResult {
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Plain-text table of suite results.
pub fn format_report(results: &[SuiteResult]) -> String {
    let mut out = format!("{:<22} {:<6} {:>9}  detail\n", "suite", "status", "seconds");
    for r in results {
        out.push_str(&format!(
            "{:<22} {:<6} {:>9.3}  {}\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        ));
    }
    out
}

fn check_basis() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for order in 1..=16 {
        let b = SpectralBasis::new(order)?;
        for p in 0..=(2 * order - 1) {
            let quad: f64 = b.nodes().iter().zip(b.weights()).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            worst = worst.max((quad - exact).abs());
        }
        let n = b.n();
        for p in 1..=order {
            for i in 0..n {
                let d: f64 = (0..n).map(|j| b.deriv()[(i, j)] * b.nodes()[j].powi(p as i32)).sum();
                let exact = p as f64 * b.nodes()[i].powi(p as i32 - 1);
                worst = worst.max((d - exact).abs());
            }
        }
    }
    Ok((worst < 1e-10, format!("max error {worst:.2e}")))
}

/// Lagrange derivative matrix from the barycentric formula, independent of
/// the basis module.
fn barycentric_derivative(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let w: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i][j] = w[j] / w[i] / (x[i] - x[j]);
            }
        }
        d[i][i] = -(0..n).filter(|&j| j != i).map(|j| d[i][j]).sum::<f64>();
    }
    d
}

/// Compares `axhelm` on a box element against the Kronecker-product
/// stiffness and mass built from 1D matrices.
fn check_axhelm(axhelm: &AxhelmKernel) -> Result<(bool, String)> {
    let order = 5;
    let lengths = [2.0, 0.5, 1.25];
    let spec = BoxSpec::unit([1, 1, 1]).with_bounds([0.3, -0.2, 1.0], [2.3, 0.3, 2.25]);
    let mesh = build_box_mesh(&spec)?;
    let basis = SpectralBasis::new(order)?;
    let gf = build_geometric_factors(&mesh, &basis)?;
    let (h1, h2) = (1.3, 0.7);
    let coeffs = HelmholtzCoeffs::scalar(h1, h2)?;
    let n = basis.n();
    let x = basis.nodes();
    let w = basis.weights();
    let d = barycentric_derivative(x);
    // 1D stiffness on the reference interval
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|q| w[q] * d[q][i] * d[q][j]).sum()).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u: Vec<f64> = (0..n * n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut got = vec![0.0; u.len()];
    axhelm(&u, &coeffs, &gf, &basis, &mut got);
    let jac = lengths.iter().product::<f64>() / 8.0;
    let mut worst = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let mut y = h2 * jac * w[i] * w[j] * w[k] * u[i + n * (j + n * k)];
                for m in 0..n {
                    let s = [4.0 / (lengths[0] * lengths[0]), 4.0 / (lengths[1] * lengths[1]), 4.0 / (lengths[2] * lengths[2])];
                    y += h1 * jac * s[0] * a[i][m] * w[j] * w[k] * u[m + n * (j + n * k)];
                    y += h1 * jac * s[1] * w[i] * a[j][m] * w[k] * u[i + n * (m + n * k)];
                    y += h1 * jac * s[2] * w[i] * w[j] * a[k][m] * u[i + n * (j + n * m)];
                }
                worst = worst.max((y - got[i + n * (j + n * k)]).abs());
            }
        }
    }
    Ok((worst < 1e-11, format!("max abs diff {worst:.2e}")))
}

fn check_xxt() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for &dim in &[2usize, 17, 60] {
        // banded SPD: random symmetric band plus a dominant diagonal
        let mut t = Vec::new();
        for i in 0..dim {
            let mut row = 0.0;
            for j in i.saturating_sub(3)..i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push((i, j, v));
                t.push((j, i, v));
                row += v.abs();
            }
            t.push((i, i, 7.0 + row));
        }
        let a = CsrMatrix::from_triplets(dim, dim, t);
        let f = xxt_factor(&a)?;
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = f.solve(&b);
        let mut r = vec![0.0; dim];
        a.spmv(&x, &mut r);
        r.iter_mut().zip(&b).for_each(|(r, b)| *r -= b);
        worst = worst.max(norm2(&r) / norm2(&b));
    }
    Ok((worst <= 1e-9, format!("max relative residual {worst:.2e}")))
}

fn check_divergence() -> Result<(bool, String)> {
    let spec = BoxSpec::unit([1, 2, 1])
        .with_bounds([0.0, -1.0, 0.0], [1.0, 1.0, 1.0])
        .with_periodic([true, false, true]);
    let disc = Discretization::new(build_box_mesh(&spec)?, 5)?;
    let mut settings = SolverSettings::default();
    settings.pressure.preconditioner = PreconditionerKind::Jacobi;
    let tol = settings.pressure.tolerance;
    let mut solver = FlowSolver::new(&disc, TimeScheme::new(2, 0.1)?, settings, Partition::single(disc.num_elements()))?;
    let mut state = FlowState::at_rest(&disc, 1.0, Forcing::Constant([2.0, 0.0, 0.0]));
    let mut worst = 0.0f64;
    for _ in 0..10 {
        worst = worst.max(solver.advance(&mut state)?.divergence);
    }
    Ok((worst <= 10.0 * tol, format!("max ||D u|| {worst:.2e}, bound {:.1e}", 10.0 * tol)))
}

fn check_temporal_order() -> Result<(bool, String)> {
    let flow = ManufacturedFlow::default();
    let p = flow.observed_order(2, 4, [0.05, 0.025, 0.0125], 0.5)?;
    Ok(((p - 2.0).abs() <= 0.3, format!("BDF2/EXT2 observed order {p:.3}")))
}

/// Divergence-free flow in `[-1,1]^2 x [0,1]` with no-slip walls in x and y:
/// `u = A(t) (psi_y, -psi_x, 0)` with `psi = (1-x^2)^2 (1-y^2)^2`,
/// `A(t) = amplitude cos t`, pressure `p = x y`, and the body force that
/// makes it an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedFlow {
    pub re: f64,
    pub amplitude: f64,
    pub advection: bool,
}

impl Default for ManufacturedFlow {
    fn default() -> Self {
        Self {
            re: 1.0,
            amplitude: 0.25,
            advection: true,
        }
    }
}

impl ManufacturedFlow {
    pub fn box_spec(counts: [usize; 3]) -> BoxSpec {
        BoxSpec::unit(counts)
            .with_bounds([-1.0, -1.0, 0.0], [1.0, 1.0, 1.0])
            .with_periodic([false, false, true])
    }

    pub fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let a = self.amplitude * t.cos();
        let (px, py) = (1.0 - x[0] * x[0], 1.0 - x[1] * x[1]);
        [-4.0 * a * x[1] * px * px * py, 4.0 * a * x[0] * px * py * py, 0.0]
    }

    pub fn pressure(&self, x: [f64; 3]) -> f64 {
        x[0] * x[1]
    }

    pub fn forcing(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let a = self.amplitude * t.cos();
        let da = -self.amplitude * t.sin();
        let (xx, yy) = (x[0], x[1]);
        let (px, py) = (1.0 - xx * xx, 1.0 - yy * yy);
        let u = -4.0 * a * yy * px * px * py;
        let v = 4.0 * a * xx * px * py * py;
        let ux = 16.0 * a * xx * yy * px * py;
        let uy = -4.0 * a * px * px * (py - 2.0 * yy * yy);
        let vx = 4.0 * a * py * py * (px - 2.0 * xx * xx);
        let vy = -ux;
        let lap_u = 16.0 * a * yy * py * (px - 2.0 * xx * xx) + 24.0 * a * yy * px * px;
        let lap_v = -24.0 * a * xx * py * py - 16.0 * a * xx * px * (py - 2.0 * yy * yy);
        let (cu, cv) = if self.advection {
            (u * ux + v * uy, u * vx + v * vy)
        } else {
            (0.0, 0.0)
        };
        let ratio = if a == 0.0 { 0.0 } else { da / a };
        [
            ratio * u + cu - lap_u / self.re + yy,
            ratio * v + cv - lap_v / self.re + xx,
            0.0,
        ]
    }

    /// Runs to `t_end` from exact history and returns the final velocity.
    pub fn run(&self, disc: &Discretization, order: usize, dt: f64, t_end: f64) -> Result<GlobalVector> {
        let steps = (t_end / dt).round() as usize;
        let mut settings = SolverSettings::default();
        settings.velocity.tolerance = 1e-13;
        settings.pressure.tolerance = 1e-13;
        settings.pressure.preconditioner = PreconditionerKind::Jacobi;
        settings.velocity.max_iterations = 5000;
        settings.pressure.max_iterations = 5000;
        let mut solver = FlowSolver::new(disc, TimeScheme::new(order, dt)?, settings, Partition::single(disc.num_elements()))?;
        let history: Vec<GlobalVector> = (0..order)
            .map(|j| {
                let t = -(j as f64) * dt;
                std::array::from_fn(|d| disc.interpolate_global(|x| self.velocity(x, t)[d]))
            })
            .collect();
        let flow = *self;
        let forcing = Forcing::Function(Arc::new(move |x, t| flow.forcing(x, t)));
        let pressure = disc.interpolate_pressure(|x| self.pressure(x));
        let mut state = FlowState::from_history(disc, self.re, forcing, self.advection, 0.0, history, pressure);
        for _ in 0..steps {
            solver.advance(&mut state)?;
        }
        Ok(state.latest_velocity().clone())
    }

    /// Richardson order `log2(|u_1 - u_2| / |u_2 - u_3|)` over three halving
    /// step sizes on a 2x2x1 mesh.
    pub fn observed_order(&self, time_order: usize, degree: usize, dts: [f64; 3], t_end: f64) -> Result<f64> {
        let disc = Discretization::new(build_box_mesh(&Self::box_spec([2, 2, 1]))?, degree)?;
        let u: Vec<GlobalVector> = dts
            .iter()
            .map(|&dt| self.run(&disc, time_order, dt, t_end))
            .collect::<Result<_>>()?;
        let diff = |a: &GlobalVector, b: &GlobalVector| {
            (0..3)
                .map(|d| a[d].iter().zip(&b[d]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .sum::<f64>()
                .sqrt()
        };
        Ok((diff(&u[0], &u[1]) / diff(&u[1], &u[2])).log2())
    }
}

//! Kernel benchmark sweeps and the fast-memory capacity model.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::error::{config_err, Result};
use crate::geometry::build_geometric_factors;
use crate::gs::build_gather_scatter;
use crate::krylov::PreconditionerKind;
use crate::mesh::{build_box_mesh, BoxSpec, HexMesh, Partition};
use crate::operators::{axhelm_flops, axhelm_into, Discretization, HelmholtzCoeffs};
use crate::stepper::{FlowSolver, FlowState, Forcing, GlobalVector, SolverSettings, TimeScheme};

/// Shared-memory bytes of the tensor-product kernel at order `n`: two
/// `(N+1)^2` derivative matrices and three `(N+1)^3` work arrays in doubles.
pub fn footprint(order: usize) -> usize {
    let lx = order + 1;
    8 * (2 * lx * lx + 3 * lx * lx * lx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FastMemoryModel {
    pub capacity: usize,
}

impl Default for FastMemoryModel {
    fn default() -> Self {
        Self { capacity: 96 * 1024 }
    }
}

impl FastMemoryModel {
    pub fn fits(&self, order: usize) -> bool {
        footprint(order) <= self.capacity
    }

    /// Largest order whose footprint fits, if any.
    pub fn max_order(&self) -> Option<usize> {
        (1..).take_while(|&n| self.fits(n)).last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Axhelm,
    GsSum,
    FullStep,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Axhelm => "axhelm",
            Kernel::GsSum => "gs_sum",
            Kernel::FullStep => "full_step",
        }
    }

    /// Rough resident bytes of the benchmark fixture.
    pub fn memory_estimate(self, num_elements: usize, order: usize) -> u64 {
        let points = (num_elements * (order + 1).pow(3)) as u64;
        let doubles_per_point = match self {
            Kernel::Axhelm => 9,
            Kernel::GsSum => 5,
            Kernel::FullStep => 80,
        };
        points * 8 * doubles_per_point
    }

    /// Analytic flop count of one application, where one is documented.
    pub fn flops(self, num_elements: usize, order: usize) -> Option<f64> {
        match self {
            Kernel::Axhelm => Some(axhelm_flops(num_elements, order)),
            Kernel::GsSum => Some((num_elements * (order + 1).pow(3)) as f64),
            Kernel::FullStep => None,
        }
    }
}

/// One benchmark row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub kernel: String,
    #[serde(rename = "E")]
    pub num_elements: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub workers: usize,
    pub reps: usize,
    pub min_s: Option<f64>,
    pub median_s: Option<f64>,
    pub dof_per_s: Option<f64>,
    pub gflops: Option<f64>,
    pub elements_per_worker: f64,
    /// `ok` or `skipped: <reason>`.
    pub status: String,
}

impl BenchResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn skipped(kernel: Kernel, num_elements: usize, order: usize, workers: usize, reps: usize, reason: String) -> Self {
        Self {
            kernel: kernel.name().to_owned(),
            num_elements,
            order,
            workers,
            reps,
            min_s: None,
            median_s: None,
            dof_per_s: None,
            gflops: None,
            elements_per_worker: num_elements as f64 / workers as f64,
            status: format!("skipped: {reason}"),
        }
    }
}

/// Most cube-like factorisation of `e` into box element counts.
pub fn box_counts(e: usize) -> [usize; 3] {
    let mut best = [e, 1, 1];
    for a in 1..=e {
        if e % a != 0 {
            continue;
        }
        for b in 1..=e / a {
            if (e / a) % b != 0 {
                continue;
            }
            let c = e / a / b;
            let cand = [a, b, c];
            let spread = |v: [usize; 3]| v.iter().max().unwrap() - v.iter().min().unwrap();
            if a >= b && b >= c && spread(cand) < spread(best) {
                best = cand;
            }
        }
    }
    best
}

fn bench_mesh(num_elements: usize, periodic: bool) -> Result<HexMesh> {
    let spec = BoxSpec::unit(box_counts(num_elements)).with_periodic([periodic; 3]);
    build_box_mesh(&spec)
}

fn random_values(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

struct AxhelmFixture {
    basis: SpectralBasis,
    gf: crate::geometry::GeometricFactors,
    coeffs: HelmholtzCoeffs,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl AxhelmFixture {
    fn run(&mut self) {
        axhelm_into(&self.u, &self.coeffs, &self.gf, &self.basis, &mut self.w);
    }
}

/// One warm-up call, then `reps` timed calls.
/// Shortest timed interval; faster kernels are repeated inside each rep and
/// the per-call time is reported.
const MIN_REP_SECONDS: f64 = 0.02;

fn time_runs(reps: usize, mut f: impl FnMut()) -> Vec<f64> {
    let t = Instant::now();
    f();
    let warm = t.elapsed().as_secs_f64();
    let batch = if warm >= MIN_REP_SECONDS {
        1
    } else {
        (MIN_REP_SECONDS / warm.max(1e-9)).ceil().min(1e6) as usize
    };
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..batch {
                f();
            }
            t.elapsed().as_secs_f64() / batch as f64
        })
        .collect()
}

fn bench_settings(pressure: PreconditionerKind) -> SolverSettings {
    let mut s = SolverSettings::default();
    s.pressure.preconditioner = pressure;
    s
}

/// Output of the axhelm benchmark fixture, for checking it against the plain
/// operator.
pub fn axhelm_fixture_output(num_elements: usize, order: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut f = axhelm_fixture(num_elements, order, seed)?;
    f.run();
    Ok((f.u, f.w))
}

fn axhelm_fixture(num_elements: usize, order: usize, seed: u64) -> Result<AxhelmFixture> {
    let mesh = bench_mesh(num_elements, false)?;
    let basis = SpectralBasis::new(order)?;
    let gf = build_geometric_factors(&mesh, &basis)?;
    let u = random_values(gf.num_elements() * basis.n().pow(3), seed);
    Ok(AxhelmFixture {
        w: vec![0.0; u.len()],
        basis,
        gf,
        coeffs: HelmholtzCoeffs::scalar(1.0, 1.0)?,
        u,
    })
}

fn measure(kernel: Kernel, num_elements: usize, order: usize, reps: usize, seed: u64) -> Result<Vec<f64>> {
    match kernel {
        Kernel::Axhelm => {
            let mut fx = axhelm_fixture(num_elements, order, seed)?;
            Ok(time_runs(reps, || fx.run()))
        }
        Kernel::GsSum => {
            let mesh = bench_mesh(num_elements, false)?;
            let gs = build_gather_scatter(&mesh, order);
            let mut u = random_values(num_elements * (order + 1).pow(3), seed);
            Ok(time_runs(reps, || gs.gs_sum_in_place(&mut u)))
        }
        Kernel::FullStep => {
            let disc = Discretization::new(bench_mesh(num_elements, true)?, order)?;
            let mut solver = FlowSolver::new(
                &disc,
                TimeScheme::new(2, 1e-3)?,
                bench_settings(PreconditionerKind::Jacobi),
                Partition::single(num_elements),
            )?;
            let tau = std::f64::consts::TAU;
            let u: GlobalVector = [
                disc.interpolate_global(|x| (tau * x[0]).sin() * (tau * x[1]).cos() * (tau * x[2]).cos()),
                disc.interpolate_global(|x| -(tau * x[0]).cos() * (tau * x[1]).sin() * (tau * x[2]).cos()),
                vec![0.0; disc.num_global()],
            ];
            let p = disc.pressure_field(vec![0.0; disc.num_pressure()]);
            let mut state = FlowState::from_history(&disc, 100.0, Forcing::Zero, true, 0.0, vec![u], p);
            let mut failure = None;
            let times = time_runs(reps, || {
                if failure.is_none() {
                    failure = solver.advance(&mut state).err();
                }
            });
            failure.map_or(Ok(times), Err)
        }
    }
}

/// Benchmark settings shared by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub kernels: Vec<Kernel>,
    pub elements: Vec<usize>,
    pub orders: Vec<usize>,
    pub workers: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_budget")]
    pub memory_budget_bytes: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_reps() -> usize {
    5
}

fn default_budget() -> u64 {
    2 << 30
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 5 {
            return Err(config_err("reps", format!("{} repetitions, at least 5 are required", self.reps)));
        }
        if self.workers.contains(&0) {
            return Err(config_err("workers", "worker counts must be >= 1"));
        }
        if self.elements.contains(&0) {
            return Err(config_err("elements", "element counts must be >= 1"));
        }
        if let Some(n) = self.orders.iter().find(|&&n| n == 0 || n > 32) {
            return Err(config_err("orders", format!("order {n} is not in 1..=32")));
        }
        Ok(())
    }
}

/// Times `reps` runs of one kernel after a warm-up run, on a pool of
/// `workers` threads. Runs that would exceed `memory_budget` bytes or fail
/// to set up are reported as skipped rows.
pub fn bench_kernel(
    kernel: Kernel,
    num_elements: usize,
    order: usize,
    workers: usize,
    reps: usize,
    memory_budget: u64,
    seed: u64,
) -> Result<BenchResult> {
    if reps < 5 {
        return Err(config_err("reps", format!("{reps} repetitions, at least 5 are required")));
    }
    if workers == 0 {
        return Err(config_err("workers", "worker count must be >= 1"));
    }
    let need = kernel.memory_estimate(num_elements, order);
    if need > memory_budget {
        return Ok(BenchResult::skipped(
            kernel,
            num_elements,
            order,
            workers,
            reps,
            format!("needs ~{need} bytes, budget {memory_budget}"),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| config_err("workers", e.to_string()))?;
    let mut times = match pool.install(|| measure(kernel, num_elements, order, reps, seed)) {
        Ok(t) => t,
        Err(e) => return Ok(BenchResult::skipped(kernel, num_elements, order, workers, reps, e.to_string())),
    };
    times.sort_by(f64::total_cmp);
    let min = times[0].max(1e-12);
    let median = if reps % 2 == 1 {
        times[reps / 2]
    } else {
        0.5 * (times[reps / 2 - 1] + times[reps / 2])
    }
    .max(min);
    let dofs = (num_elements * (order + 1).pow(3)) as f64;
    Ok(BenchResult {
        kernel: kernel.name().to_owned(),
        num_elements,
        order,
        workers,
        reps,
        min_s: Some(min),
        median_s: Some(median),
        dof_per_s: Some(dofs / min),
        gflops: kernel.flops(num_elements, order).map(|f| f / min * 1e-9),
        elements_per_worker: num_elements as f64 / workers as f64,
        status: "ok".into(),
    })
}

/// Cartesian sweep in the order kernel, N, E, workers.
pub fn sweep(cfg: &BenchConfig) -> Result<Vec<BenchResult>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &kernel in &cfg.kernels {
        for &order in &cfg.orders {
            for &e in &cfg.elements {
                for &w in &cfg.workers {
                    rows.push(bench_kernel(kernel, e, order, w, cfg.reps, cfg.memory_budget_bytes, cfg.seed)?);
                }
            }
        }
    }
    Ok(rows)
}

pub const BENCH_HEADER: [&str; 11] = [
    "kernel",
    "E",
    "N",
    "workers",
    "reps",
    "min_s",
    "median_s",
    "dof_per_s",
    "gflops",
    "elements_per_worker",
    "status",
];

pub fn write_bench_csv(rows: &[BenchResult], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// True when `values` never drops by more than `band` (relative) before
/// reaching its maximum.
pub fn rises_to_saturation(values: &[f64], band: f64) -> bool {
    let Some(peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return true;
    };
    let mut best = f64::NEG_INFINITY;
    for &v in &values[..=peak] {
        if v < (1.0 - band) * best {
            return false;
        }
        best = best.max(v);
    }
    true
}

//! Subcommand implementations.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};

use semflow::comm::{count_cut_volume, virtual_node_sweep, CommGraph, CutVolume, VirtualNodeReport};
use semflow::harness::{sweep, write_bench_csv, BenchConfig, BenchResult};
use semflow::mesh::{partition_rcb_points, read_mesh_dump};
use semflow::stepper::{Checkpoint, TelemetryWriter};
use semflow::validate::{format_report, run_validate, SuiteResult};
use semflow::{build_box_mesh, partition_rcb, Discretization, FlowSolver, FlowState, Forcing, Partition, TimeScheme};

use crate::config::{CommConfig, Reference, RunConfig};

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Overrides {
    fn dir(&self, fallback: &Path) -> anyhow::Result<PathBuf> {
        let dir = self.output_dir.clone().unwrap_or_else(|| fallback.to_path_buf());
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(dir)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub steps: usize,
    pub final_divergence: f64,
    pub seconds: f64,
    /// Max pointwise error against the configured reference solution.
    pub reference_error: Option<f64>,
    pub telemetry: Option<PathBuf>,
    pub checkpoint: PathBuf,
}

pub fn run_solve(cfg: &RunConfig, opts: &Overrides) -> anyhow::Result<SolveSummary> {
    let start = Instant::now();
    let dir = opts.dir(&cfg.output.dir)?;
    let mesh = build_box_mesh(&cfg.box_spec())?;
    let disc = Discretization::new(mesh, cfg.order)?;
    let scheme = TimeScheme::new(cfg.time.order, cfg.time.dt)?;
    let mut state = FlowState::at_rest(&disc, cfg.flow.re, Forcing::Constant(cfg.flow.forcing));
    state.advection = cfg.flow.advection;
    let checkpoint = dir.join(&cfg.output.checkpoint);
    let mut telemetry = None;
    let mut final_divergence = 0.0;
    if cfg.time.steps > 0 {
        let partition = match cfg.solver.subdomains {
            Some(r) => partition_rcb(&disc.mesh, r)?,
            None => Partition::per_element(disc.num_elements()),
        };
        let mut solver = FlowSolver::new(&disc, scheme.clone(), cfg.solver_settings(), partition)?;
        let path = dir.join(&cfg.output.telemetry);
        let mut writer = TelemetryWriter::create(&path)?;
        for step in 1..=cfg.time.steps {
            let report = solver
                .advance(&mut state)
                .with_context(|| format!("step {step} failed; telemetry so far is in {}", path.display()))?;
            writer.write(&report)?;
            final_divergence = report.divergence;
        }
        telemetry = Some(path);
    }
    Checkpoint::capture(&disc, &state, scheme.order(), scheme.dt()).write(&checkpoint)?;
    let reference_error = cfg.flow.reference.map(|r| match r {
        Reference::Poiseuille => {
            let (lo, hi) = (cfg.mesh.lower[1], cfg.mesh.upper[1]);
            let amp = 0.5 * cfg.flow.re * cfg.flow.forcing[0];
            let exact = disc.interpolate_global(|x| amp * (x[1] - lo) * (hi - x[1]));
            let u = state.latest_velocity();
            let ex = u[0].iter().zip(&exact).map(|(a, b)| (a - b).abs());
            ex.chain(u[1].iter().chain(&u[2]).map(|v| v.abs())).fold(0.0, f64::max)
        }
    });
    Ok(SolveSummary {
        steps: cfg.time.steps,
        final_divergence,
        seconds: start.elapsed().as_secs_f64(),
        reference_error,
        telemetry,
        checkpoint,
    })
}

/// Runs the self-check suite; the report table and whether all passed.
pub fn run_validate_report() -> (Vec<SuiteResult>, String, bool) {
    let results = run_validate();
    let ok = results.iter().all(|r| r.passed);
    let table = format_report(&results);
    (results, table, ok)
}

pub fn run_bench(config: &Path, opts: &Overrides) -> anyhow::Result<(Vec<BenchResult>, PathBuf)> {
    let text = std::fs::read_to_string(config).with_context(|| format!("cannot read config {}", config.display()))?;
    let mut cfg: BenchConfig = toml::from_str(&text).with_context(|| format!("in config {}", config.display()))?;
    if let Some(w) = opts.workers {
        cfg.workers = vec![w];
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let dir = opts.dir(Path::new("output"))?;
    let rows = sweep(&cfg)?;
    let path = dir.join("bench.csv");
    write_bench_csv(&rows, File::create(&path)?)?;
    Ok((rows, path))
}

pub fn run_commsim(config: &Path, opts: &Overrides) -> anyhow::Result<(CutVolume, Vec<VirtualNodeReport>, PathBuf)> {
    let text = std::fs::read_to_string(config).with_context(|| format!("cannot read config {}", config.display()))?;
    let cfg: CommConfig = toml::from_str(&text).with_context(|| format!("in config {}", config.display()))?;
    cfg.validate()?;
    let base = config.parent().unwrap_or(Path::new("."));
    let read_partition = |path: &Path, elements: usize| -> anyhow::Result<Partition> {
        let path = base.join(path);
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let owner: Vec<usize> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| l.trim().parse().with_context(|| format!("{}: entry {}", path.display(), i + 1)))
            .collect::<anyhow::Result<_>>()?;
        if owner.len() != elements {
            bail!("{}: {} entries for {elements} elements", path.display(), owner.len());
        }
        let ranks = owner.iter().max().map_or(1, |m| m + 1);
        Ok(Partition::new(ranks, owner)?)
    };
    let graph = if let Some(dump) = &cfg.mesh_dump {
        let elements = read_mesh_dump(&base.join(dump))?;
        let partition = match &cfg.partition_file {
            Some(p) => read_partition(p, elements.len())?,
            None => {
                let centroids: Vec<[f64; 3]> = elements
                    .iter()
                    .map(|c| std::array::from_fn(|d| c.iter().map(|p| p[d]).sum::<f64>() / 8.0))
                    .collect();
                partition_rcb_points(&centroids, cfg.ranks.unwrap_or(1))?
            }
        };
        CommGraph::from_corners(&elements, &partition, cfg.order)?
    } else {
        let m = cfg.mesh.as_ref().expect("validated");
        let spec = semflow::BoxSpec::unit(m.elements)
            .with_bounds(m.lower, m.upper)
            .with_periodic(m.periodic);
        let mesh = build_box_mesh(&spec)?;
        let partition = match &cfg.partition_file {
            Some(p) => read_partition(p, mesh.num_elements())?,
            None => partition_rcb(&mesh, cfg.ranks.unwrap_or(1))?,
        };
        CommGraph::from_mesh(&mesh, &partition, cfg.order)?
    };
    let cut = count_cut_volume(&graph);
    let reports = virtual_node_sweep(&graph, &cfg.sizes)?;
    let dir = opts.dir(Path::new("output"))?;
    let path = dir.join("commsim.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok((cut, reports, path))
}

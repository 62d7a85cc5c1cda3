//! Run configuration files (TOML).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use semflow::krylov::{KrylovConfig, PreconditionerKind, SchwarzConfig};
use semflow::{BoxSpec, SolverSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: String,
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshSection,
    pub order: usize,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub elements: [usize; 3],
    #[serde(default = "zeros")]
    pub lower: [f64; 3],
    #[serde(default = "ones")]
    pub upper: [f64; 3],
    /// Non-periodic directions are no-slip walls.
    #[serde(default)]
    pub periodic: [bool; 3],
}

fn zeros() -> [f64; 3] {
    [0.0; 3]
}

fn ones() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "default_time_order")]
    pub order: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_time_order() -> usize {
    2
}

fn default_dt() -> f64 {
    1e-2
}

fn default_steps() -> usize {
    30
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            order: default_time_order(),
            dt: default_dt(),
            steps: default_steps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Steady channel profile between the y walls.
    Poiseuille,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "default_re")]
    pub re: f64,
    #[serde(default = "zeros")]
    pub forcing: [f64; 3],
    #[serde(default = "default_true")]
    pub advection: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

fn default_re() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            re: default_re(),
            forcing: zeros(),
            advection: true,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub tolerance: f64,
    pub preconditioner: PreconditionerKind,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub projection_depth: usize,
}

fn default_max_iterations() -> usize {
    1000
}

impl SolveSection {
    fn krylov(&self) -> KrylovConfig {
        KrylovConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            preconditioner: self.preconditioner,
            projection_depth: self.projection_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_velocity")]
    pub velocity: SolveSection,
    #[serde(default = "default_pressure")]
    pub pressure: SolveSection,
    #[serde(default)]
    pub schwarz: SchwarzConfig,
    /// Schwarz subdomain count from recursive bisection; one subdomain per
    /// element when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdomains: Option<usize>,
}

fn default_velocity() -> SolveSection {
    SolveSection {
        tolerance: 1e-8,
        preconditioner: PreconditionerKind::Jacobi,
        max_iterations: default_max_iterations(),
        projection_depth: 0,
    }
}

fn default_pressure() -> SolveSection {
    SolveSection {
        tolerance: 1e-6,
        preconditioner: PreconditionerKind::Schwarz,
        max_iterations: default_max_iterations(),
        projection_depth: 0,
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            velocity: default_velocity(),
            pressure: default_pressure(),
            schwarz: SchwarzConfig::default(),
            subdomains: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_telemetry")]
    pub telemetry: String,
    #[serde(default = "default_checkpoint")]
    pub checkpoint: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("output")
}

fn default_telemetry() -> String {
    "telemetry.csv".into()
}

fn default_checkpoint() -> String {
    "final.chk".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            telemetry: default_telemetry(),
            checkpoint: default_checkpoint(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn box_spec(&self) -> BoxSpec {
        BoxSpec::unit(self.mesh.elements)
            .with_bounds(self.mesh.lower, self.mesh.upper)
            .with_periodic(self.mesh.periodic)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            velocity: self.solver.velocity.krylov(),
            pressure: self.solver.pressure.krylov(),
            schwarz: self.solver.schwarz.clone(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let m = &self.mesh;
        if m.elements.contains(&0) {
            bail!("invalid mesh.elements: every count must be >= 1");
        }
        for d in 0..3 {
            if !(m.upper[d] > m.lower[d]) {
                bail!("invalid mesh.upper: upper[{d}] must exceed lower[{d}]");
            }
        }
        if self.order < 3 {
            bail!(
                "invalid order: N = {} but the pressure solve needs N >= 3",
                self.order
            );
        }
        if self.order > 32 {
            bail!("invalid order: N = {} exceeds 32", self.order);
        }
        if !(1..=3).contains(&self.time.order) {
            bail!("invalid time.order: {} is not in 1..=3", self.time.order);
        }
        if !(self.time.dt > 0.0 && self.time.dt.is_finite()) {
            bail!("invalid time.dt: {} must be positive", self.time.dt);
        }
        if !(self.flow.re > 0.0 && self.flow.re.is_finite()) {
            bail!("invalid flow.re: {} must be positive", self.flow.re);
        }
        for (name, s) in [("velocity", &self.solver.velocity), ("pressure", &self.solver.pressure)] {
            if !(s.tolerance > 0.0 && s.tolerance < 1.0) {
                bail!("invalid solver.{name}.tolerance: {} is outside (0, 1)", s.tolerance);
            }
            if s.max_iterations == 0 {
                bail!("invalid solver.{name}.max_iterations: must be >= 1");
            }
        }
        if self.solver.subdomains == Some(0) {
            bail!("invalid solver.subdomains: must be >= 1");
        }
        if self.flow.reference == Some(Reference::Poiseuille) && m.periodic[1] {
            bail!("invalid flow.reference: the Poiseuille profile needs walls in y");
        }
        Ok(())
    }
}

/// Reads and validates a config file; errors carry the path and, for syntax
/// errors, the line.
pub fn parse_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    RunConfig::from_toml(&text).with_context(|| format!("in config {}", path.display()))
}

/// Settings of the `commsim` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommConfig {
    pub order: usize,
    pub sizes: Vec<usize>,
    /// Ranks for recursive bisection; ignored when `partition_file` is set.
    #[serde(default)]
    pub ranks: Option<usize>,
    /// Mesh dump to read; the box mesh below is used otherwise.
    #[serde(default)]
    pub mesh_dump: Option<PathBuf>,
    #[serde(default)]
    pub mesh: Option<MeshSection>,
    /// One rank id per line, element order.
    #[serde(default)]
    pub partition_file: Option<PathBuf>,
}

impl CommConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.order == 0 {
            bail!("invalid order: must be >= 1");
        }
        if self.mesh_dump.is_none() && self.mesh.is_none() {
            bail!("invalid mesh: give either mesh_dump or a [mesh] table");
        }
        if self.partition_file.is_none() && self.ranks.is_none() {
            bail!("invalid ranks: give either ranks or partition_file");
        }
        Ok(())
    }
}

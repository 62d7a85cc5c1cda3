use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::solver::StepReport;
use super::state::{FlowState, Forcing, GlobalVector};
use crate::error::{Result, SemError};
use crate::operators::Discretization;

const MAGIC: &[u8; 8] = b"SEMFLOW1";

/// Contents of a binary checkpoint.
///
/// Layout (little endian): magic, `u64` E, N, k, step, velocity levels, `f64`
/// dt, then `f64` payload: time, each velocity level as three assembled
/// components (newest first), pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub num_elements: usize,
    pub order: usize,
    pub time_order: usize,
    pub step: usize,
    pub dt: f64,
    pub time: f64,
    pub velocity: Vec<GlobalVector>,
    pub pressure: Vec<f64>,
}

impl Checkpoint {
    pub fn capture(disc: &Discretization, state: &FlowState, time_order: usize, dt: f64) -> Self {
        Self {
            num_elements: disc.num_elements(),
            order: disc.order(),
            time_order,
            step: state.step,
            dt,
            time: state.time,
            velocity: state.velocity.iter().cloned().collect(),
            pressure: state.pressure.values().to_vec(),
        }
    }

    /// Rebuilds a flow state; the convection history is recomputed.
    pub fn restore(&self, disc: &Discretization, re: f64, forcing: Forcing, advection: bool) -> Result<FlowState> {
        if self.num_elements != disc.num_elements() || self.order != disc.order() {
            return Err(SemError::Format {
                path: PathBuf::new(),
                reason: format!(
                    "checkpoint has E={} N={}, discretization has E={} N={}",
                    self.num_elements,
                    self.order,
                    disc.num_elements(),
                    disc.order()
                ),
            });
        }
        let pressure = disc.pressure_field(self.pressure.clone());
        let mut state = FlowState::from_history(disc, re, forcing, advection, self.time, self.velocity.clone(), pressure);
        state.step = self.step;
        Ok(state)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        for v in [self.num_elements, self.order, self.time_order, self.step, self.velocity.len()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for level in &self.velocity {
            for comp in level {
                write_f64s(&mut w, comp)?;
            }
        }
        write_f64s(&mut w, &self.pressure)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a checkpoint written for `disc`; sizes come from the
    /// discretization and are checked against the header.
    pub fn read(path: &Path, disc: &Discretization) -> Result<Self> {
        let bad = |reason: String| SemError::Format {
            path: path.to_path_buf(),
            reason,
        };
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header".into()))?;
        if &magic != MAGIC {
            return Err(bad("not a checkpoint file".into()));
        }
        let mut header = [0usize; 5];
        for h in header.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| bad("truncated header".into()))?;
            *h = u64::from_le_bytes(b) as usize;
        }
        let [num_elements, order, time_order, step, levels] = header;
        if num_elements != disc.num_elements() || order != disc.order() {
            return Err(bad(format!("E={num_elements} N={order} does not match the configured mesh")));
        }
        let mut read_n = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; 8 * n];
            r.read_exact(&mut buf).map_err(|_| bad("truncated payload".into()))?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };
        let dt = read_n(1)?[0];
        let time = read_n(1)?[0];
        let ng = disc.num_global();
        let mut velocity = Vec::with_capacity(levels);
        for _ in 0..levels {
            velocity.push([read_n(ng)?, read_n(ng)?, read_n(ng)?]);
        }
        let pressure = read_n(disc.num_pressure())?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(bad(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self {
            num_elements,
            order,
            time_order,
            step,
            dt,
            time,
            velocity,
            pressure,
        })
    }
}

fn write_f64s(w: &mut impl Write, v: &[f64]) -> std::io::Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// CSV header of the per-step telemetry stream.
pub const TELEMETRY_HEADER: [&str; 9] = [
    "step",
    "time",
    "iterations_v",
    "iterations_p",
    "residual_v",
    "residual_p",
    "divergence",
    "cfl",
    "wall_s",
];

/// Per-step telemetry CSV; every row is flushed so a failed run keeps its
/// partial record.
pub struct TelemetryWriter {
    inner: csv::Writer<File>,
}

impl TelemetryWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(TELEMETRY_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &StepReport) -> Result<()> {
        self.inner.write_record([
            row.step.to_string(),
            format!("{:e}", row.time),
            row.iterations_v.to_string(),
            row.iterations_p.to_string(),
            format!("{:e}", row.residual_v),
            format!("{:e}", row.residual_p),
            format!("{:e}", row.divergence),
            format!("{:e}", row.cfl),
            format!("{:.6}", row.wall_s),
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

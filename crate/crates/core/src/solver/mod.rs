//! Leapfrog Yee update with lossy dielectrics, PEC, CPML and lumped ports.
//!
//! Time stamps: after step `n` the electric field and port voltages belong to
//! `(n + 1) dt`, the magnetic field and port currents to `(n + 1/2) dt`.

mod dump;
mod engine;
mod excitation;
mod huygens;

pub use dump::{read_dump, write_dump};
pub use engine::{FieldState, Simulation};
pub use excitation::{Excitation, Waveform};
pub use huygens::{HuygensRecord, HuygensSample, HuygensSpec};

use crate::mesh::YeeGrid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("divergence: non-finite field detected at step {step}")]
    Divergence { step: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("port {port} sits on a PEC-shorted edge")]
    PortOnPec { port: usize },
    #[error("invalid CPML: {0}")]
    InvalidCpml(String),
    #[error("recording file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed recording: {0}")]
    Format(String),
}

/// Convolutional PML parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmlSpec {
    pub thickness: usize,
    pub order: f64,
    /// Multiplier on the optimal sigma_max.
    pub sigma_scale: f64,
    pub kappa_max: f64,
    /// S/m.
    pub alpha_max: f64,
}

impl Default for CpmlSpec {
    fn default() -> Self {
        Self {
            thickness: 10,
            order: 3.0,
            sigma_scale: 1.0,
            kappa_max: 5.0,
            alpha_max: 0.05,
        }
    }
}

impl CpmlSpec {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.thickness < 4 {
            return Err(SolverError::InvalidCpml("thickness must be at least 4 cells".into()));
        }
        if !(self.order >= 1.0) {
            return Err(SolverError::InvalidCpml("polynomial order must be at least 1".into()));
        }
        if !(self.kappa_max >= 1.0) || !(self.sigma_scale >= 0.0) || !(self.alpha_max >= 0.0) {
            return Err(SolverError::InvalidCpml("kappa_max >= 1, sigma and alpha non-negative".into()));
        }
        Ok(())
    }

    /// Check the grid's padding matches this layer.
    pub fn check_grid(&self, grid: &YeeGrid) -> Result<(), SolverError> {
        self.validate()?;
        for (f, &cells) in grid.pml_cells.iter().enumerate() {
            if cells != 0 && cells != self.thickness {
                return Err(SolverError::InvalidCpml(format!(
                    "face {f} has {cells} padding cells, layer wants {}",
                    self.thickness
                )));
            }
        }
        Ok(())
    }
}

/// Field component selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
}

impl Component {
    pub fn axis(&self) -> usize {
        match self {
            Component::Ex | Component::Hx => 0,
            Component::Ey | Component::Hy => 1,
            Component::Ez | Component::Hz => 2,
        }
    }

    pub fn is_electric(&self) -> bool {
        matches!(self, Component::Ex | Component::Ey | Component::Ez)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    /// One field sample at node-indexed position.
    Point { comp: Component, node: [usize; 3] },
    /// Area-weighted mean of a tangential component over the plane `k`.
    PlaneMean { comp: Component, k: usize },
}

/// What drives the run.
#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    /// Thevenin source in the port with this index; all other ports are loads.
    Port(usize),
    /// Soft surface current density (A/m) on the Ex edges of plane `k`.
    SheetX { k: usize },
    /// No source; only the initial state evolves.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunControl {
    pub max_steps: usize,
    /// Port-energy convergence threshold relative to the peak window.
    pub threshold: f64,
    pub window: usize,
    pub huygens: Option<HuygensSpec>,
    pub probes: Vec<Probe>,
    /// Overrides the grid's stable step when set.
    pub courant: f64,
}

impl Default for RunControl {
    fn default() -> Self {
        Self {
            max_steps: 20_000,
            threshold: 1e-5,
            window: 1000,
            huygens: None,
            probes: Vec::new(),
            courant: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortRecord {
    pub index: usize,
    pub impedance: f64,
    /// Gap voltage at `(n + 1) dt`.
    pub v: Vec<f64>,
    /// Feed current at `(n + 1/2) dt`, flowing into the structure.
    pub i: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recordings {
    pub dt: f64,
    pub steps: usize,
    pub drive: Drive,
    pub excitation: Excitation,
    pub ports: Vec<PortRecord>,
    pub probes: Vec<Vec<f64>>,
    pub huygens: Option<HuygensRecord>,
    /// False when `max_steps` ran out before the energy criterion was met.
    pub converged: bool,
}

impl Recordings {
    pub fn port(&self, index: usize) -> Option<&PortRecord> {
        self.ports.iter().find(|p| p.index == index)
    }
}

/// Run one excitation to convergence or `max_steps`.
pub fn run(
    grid: &YeeGrid,
    cpml: &CpmlSpec,
    drive: Drive,
    excitation: &Excitation,
    control: &RunControl,
) -> Result<Recordings, SolverError> {
    let threads = std::env::var("YEEFIELD_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SolverError::Config(e.to_string()))?;
            pool.install(|| run_inner(grid, cpml, drive, excitation, control))
        }
        _ => run_inner(grid, cpml, drive, excitation, control),
    }
}

fn run_inner(
    grid: &YeeGrid,
    cpml: &CpmlSpec,
    drive: Drive,
    excitation: &Excitation,
    control: &RunControl,
) -> Result<Recordings, SolverError> {
    let mut sim = Simulation::new(grid, cpml, control.courant)?;
    sim.set_drive(drive.clone(), excitation.clone())?;
    if let Some(spec) = &control.huygens {
        sim.attach_huygens(spec.clone())?;
    }
    for p in &control.probes {
        sim.add_probe(p.clone())?;
    }

    let source_end = excitation.duration();
    let mut power = Vec::with_capacity(control.max_steps.min(1 << 20));
    let (mut window_sum, mut peak) = (0.0f64, 0.0f64);
    let mut converged = false;
    while sim.step_index() < control.max_steps {
        sim.step()?;
        let p = sim.port_power();
        power.push(p);
        window_sum += p;
        if power.len() > control.window {
            window_sum -= power[power.len() - 1 - control.window];
        }
        peak = peak.max(window_sum);
        let t = sim.step_index() as f64 * sim.dt();
        // Only port power decides convergence; other drives run to max_steps.
        if !matches!(drive, Drive::Port(_)) || t < source_end || power.len() < control.window {
            continue;
        }
        if window_sum <= control.threshold * peak {
            converged = true;
            break;
        }
    }
    Ok(sim.into_recordings(converged))
}

#[cfg(test)]
mod tests;

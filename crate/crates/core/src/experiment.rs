//! Scenario runs: one FDTD excitation per port, S-parameters, far fields
//! and the aggregated metrics summary.

use crate::amc::{analytic_curve, band_of, reflection_phase_fdtd, AmcCellParams, CellKind, FdtdPhaseOptions, PhaseCurve};
use crate::farfield::{self, AngleGrid, FarField, FarFieldError};
use crate::mesh::{cfl_timestep, generate_mesh, MeshMode, MeshPolicy, YeeGrid};
use crate::network::{self, db20, SMatrix};
use crate::scene::{Polarization, Scene, SceneConfig, ScenarioName};
use crate::solver::{self, CpmlSpec, Drive, Excitation, HuygensSpec, Recordings, RunControl};
use num_complex::Complex64;
use std::fmt::Write as _;
use thiserror::Error;

/// Printed at the top of every summary.
pub const DISCLAIMER: &str = "coarse-mesh trend run: sub-cell gaps are widened, so absolute values \
     differ from full-fidelity results; exact values need fine mode beyond desk resources";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] crate::scene::ConfigError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Network(#[from] network::NetworkError),
    #[error(transparent)]
    FarField(#[from] FarFieldError),
    #[error(transparent)]
    Amc(#[from] crate::amc::AmcError),
    #[error("bad weights: {0}")]
    Weights(String),
    #[error("port {0} is not in the scene")]
    UnknownPort(usize),
}

/// Excitation weights for pattern superposition.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Odd,
    Even,
    All,
    List(Vec<Complex64>),
}

impl Weights {
    /// `odd`, `even`, `all`, or a comma list of `mag` or `mag@deg` entries.
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        match s.trim() {
            "odd" => return Ok(Weights::Odd),
            "even" => return Ok(Weights::Even),
            "all" => return Ok(Weights::All),
            _ => {}
        }
        let bad = || ExperimentError::Weights(format!("cannot parse `{s}`"));
        let list = s
            .split(',')
            .map(|t| {
                let (m, p) = t.trim().split_once('@').unwrap_or((t.trim(), "0"));
                let m: f64 = m.trim().parse().map_err(|_| bad())?;
                let p: f64 = p.trim().parse().map_err(|_| bad())?;
                Ok(Complex64::from_polar(m, p.to_radians()))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        Ok(Weights::List(list))
    }

    /// One weight per port number in `ports` (ascending).
    pub fn resolve(&self, ports: &[usize]) -> Result<Vec<Complex64>, ExperimentError> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        Ok(match self {
            Weights::Odd => ports.iter().map(|p| if p % 2 == 1 { one } else { zero }).collect(),
            Weights::Even => ports.iter().map(|p| if p % 2 == 0 { one } else { zero }).collect(),
            Weights::All => vec![one; ports.len()],
            Weights::List(w) if w.len() == ports.len() => w.clone(),
            Weights::List(w) => {
                return Err(ExperimentError::Weights(format!(
                    "{} weights for {} ports",
                    w.len(),
                    ports.len()
                )))
            }
        })
    }

    /// Reference polarization for XPD: the polarization of the weighted ports.
    pub fn polarization(&self, ports: &[usize]) -> Polarization {
        let w = self.resolve(ports).unwrap_or_default();
        let (mut x, mut y) = (0.0, 0.0);
        for (p, w) in ports.iter().zip(w) {
            if p % 2 == 1 {
                x += w.norm();
            } else {
                y += w.norm();
            }
        }
        if y > x {
            Polarization::Y
        } else {
            Polarization::X
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub mesh: MeshMode,
    pub freqs: Vec<f64>,
    /// Frequency of the far-field pattern.
    pub pattern_freq: f64,
    /// Ports to excite; `None` means all.
    pub ports: Option<Vec<usize>>,
    pub weights: Weights,
    pub max_steps: usize,
    pub angle_step: f64,
    /// Huygens box clearance around the structure, in cells.
    pub huygens_margin: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mesh: MeshMode::Coarse,
            freqs: network::default_freqs(),
            pattern_freq: 28e9,
            ports: None,
            weights: Weights::Odd,
            max_steps: RunControl::default().max_steps,
            angle_step: 1.0,
            huygens_margin: 3,
        }
    }
}

pub fn mesh_policy(scene: &Scene, mode: MeshMode) -> MeshPolicy {
    match mode {
        MeshMode::Coarse => MeshPolicy::coarse(scene),
        MeshMode::Fine => MeshPolicy::fine(scene),
    }
}

/// Scene and grid of an antenna scenario.
pub fn build(cfg: &SceneConfig, scenario: ScenarioName, mode: MeshMode) -> Result<(Scene, YeeGrid), ExperimentError> {
    let scene = cfg.build(scenario)?;
    let grid = generate_mesh(&scene, &mesh_policy(&scene, mode))?;
    Ok((scene, grid))
}

/// Outcome of one port excitation.
#[derive(Debug)]
pub struct Excited {
    pub port: usize,
    pub result: Result<(Recordings, FarField), ExperimentError>,
}

#[derive(Debug)]
pub struct AntennaRun {
    pub scenario: ScenarioName,
    pub scene: Scene,
    pub grid: YeeGrid,
    pub dt: f64,
    pub excitations: Vec<Excited>,
    pub smatrix: Option<SMatrix>,
    /// Weighted far field at the pattern frequency.
    pub pattern: Option<FarField>,
    pub polarization: Polarization,
    pub errors: Vec<String>,
}

/// Run every requested excitation, then assemble S and the weighted pattern.
pub fn run_antenna(cfg: &SceneConfig, scenario: ScenarioName, opts: &RunOptions) -> Result<AntennaRun, ExperimentError> {
    let (scene, grid) = build(cfg, scenario, opts.mesh)?;
    let all: Vec<usize> = scene.ports.iter().map(|p| p.index).collect();
    let ports = opts.ports.clone().unwrap_or_else(|| all.clone());
    if let Some(&p) = ports.iter().find(|p| !all.contains(p)) {
        return Err(ExperimentError::UnknownPort(p));
    }
    let weights = opts.weights.resolve(&all)?;
    let mut huygens_freqs = vec![opts.pattern_freq];
    huygens_freqs.dedup();
    let control = RunControl {
        max_steps: opts.max_steps,
        huygens: Some(HuygensSpec::around_structure(&grid, huygens_freqs, opts.huygens_margin)?),
        ..RunControl::default()
    };
    let exc = Excitation::antenna_default();
    let angles = AngleGrid::uniform(opts.angle_step);
    let mut excitations = Vec::new();
    for &port in &ports {
        let result = solver::run(&grid, &CpmlSpec::default(), Drive::Port(port), &exc, &control)
            .map_err(ExperimentError::from)
            .and_then(|rec| {
                let record = rec.huygens.as_ref().expect("Huygens box attached");
                let mut ff = farfield::ntff(record, opts.pattern_freq, &angles)?;
                ff.attach_port_waves(&rec);
                Ok((rec, ff))
            });
        excitations.push(Excited { port, result });
    }

    let mut errors: Vec<String> = excitations
        .iter()
        .filter_map(|e| e.result.as_ref().err().map(|err| format!("excitation of port {}: {err}", e.port)))
        .collect();
    let ok: Vec<&(Recordings, FarField)> = excitations.iter().filter_map(|e| e.result.as_ref().ok()).collect();
    let recs: Vec<Recordings> = ok.iter().map(|(r, _)| r.clone()).collect();
    let smatrix = if recs.is_empty() {
        None
    } else {
        match network::extract_sparams(&recs, &opts.freqs, true) {
            Ok(s) => Some(s),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        }
    };
    // Superpose over the excited ports; a weighted port that was not run
    // (or failed) makes the pattern unavailable.
    let mut fields = Vec::new();
    let mut w = Vec::new();
    let mut missing = Vec::new();
    for (p, &wp) in all.iter().zip(&weights) {
        match excitations.iter().find(|e| e.port == *p).and_then(|e| e.result.as_ref().ok()) {
            Some((_, ff)) => {
                fields.push(ff.clone());
                w.push(wp);
            }
            None if wp != Complex64::default() => missing.push(*p),
            None => {}
        }
    }
    let pattern = if !missing.is_empty() {
        errors.push(format!("pattern needs excitations of ports {missing:?}"));
        None
    } else if fields.is_empty() {
        None
    } else {
        Some(farfield::superpose_excitations(&fields, &w)?)
    };
    Ok(AntennaRun {
        scenario,
        dt: cfl_timestep(&grid, RunControl::default().courant),
        polarization: opts.weights.polarization(&all),
        scene,
        grid,
        excitations,
        smatrix,
        pattern,
        errors,
    })
}

/// A metric value or the reason it is unavailable.
pub type Metric<T> = Result<T, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct PortBand {
    pub port: usize,
    pub band: Metric<network::BandMetric>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub disclaimer: String,
    pub ports: Vec<PortBand>,
    pub mean_bandwidth: Metric<f64>,
    /// Worst coupling in dB with the `(victim, source)` port pair.
    pub worst_isolation: Metric<(f64, usize, usize)>,
    pub peak_gain_dbi: Metric<f64>,
    pub peak_direction: Metric<(f64, f64)>,
    pub hpbw_phi0: Metric<f64>,
    pub hpbw_phi90: Metric<f64>,
    pub aperture_efficiency: Metric<f64>,
    pub xpd_phi0: Metric<f64>,
    pub xpd_phi90: Metric<f64>,
    pub converged: Vec<(usize, bool)>,
}

/// Largest off-diagonal `|S|` over every excited column, each within its
/// own operating band.
pub fn worst_isolation_pair(s: &SMatrix) -> Option<(f64, usize, usize)> {
    let mut worst: Option<(f64, usize, usize)> = None;
    for (col, &src) in s.ports.iter().enumerate() {
        if !s.excited[col] {
            continue;
        }
        let Ok(band) = network::operating_band(s, src, -10.0) else { continue };
        for (fi, f) in s.freqs.iter().enumerate() {
            if *f < band.0 || *f > band.1 {
                continue;
            }
            for (row, &victim) in s.ports.iter().enumerate() {
                if row == col {
                    continue;
                }
                let v = db20(s.data[fi][(row, col)].norm());
                if worst.map_or(true, |w| v > w.0) {
                    worst = Some((v, victim, src));
                }
            }
        }
    }
    worst
}

fn err<T, E: std::fmt::Display>(r: Result<T, E>) -> Metric<T> {
    r.map_err(|e| e.to_string())
}

/// Everything in the summary, from an S-matrix and a far field. Both sides
/// of a run and of `metrics` go through here.
pub fn summarize(
    s: Option<&SMatrix>,
    pattern: Option<(&FarField, &[f64])>,
    area: f64,
    pol: Polarization,
    converged: Vec<(usize, bool)>,
) -> MetricsSummary {
    let no_s = || "no S-parameters".to_string();
    let (ports, mean_bandwidth, worst_isolation) = match s {
        Some(s) => {
            let (per_port, mean) = network::matching_summary(s, -10.0);
            let ports = per_port
                .into_iter()
                .map(|(port, b)| PortBand {
                    port,
                    band: b.ok_or_else(|| "no -10 dB band in the sweep".to_string()),
                })
                .collect();
            let iso = if s.nports() < 2 {
                Err("single port".to_string())
            } else {
                worst_isolation_pair(s).ok_or_else(|| "no excited column".to_string())
            };
            (ports, mean.ok_or_else(|| "no excited port".to_string()), iso)
        }
        None => (Vec::new(), Err(no_s()), Err(no_s())),
    };
    let mut summary = MetricsSummary {
        disclaimer: DISCLAIMER.to_string(),
        ports,
        mean_bandwidth,
        worst_isolation,
        peak_gain_dbi: Err("no pattern".into()),
        peak_direction: Err("no pattern".into()),
        hpbw_phi0: Err("no pattern".into()),
        hpbw_phi90: Err("no pattern".into()),
        aperture_efficiency: Err("no pattern".into()),
        xpd_phi0: Err("no pattern".into()),
        xpd_phi90: Err("no pattern".into()),
        converged,
    };
    if let Some((ff, gain)) = pattern {
        let peak = (0..gain.len()).fold(0, |m, i| if gain[i] > gain[m] { i } else { m });
        let np = ff.grid.phi.len();
        let beam = |phi| farfield::cut(ff, gain, phi).and_then(|(a, v)| farfield::hpbw(&a, &v));
        summary.peak_gain_dbi = Ok(gain[peak]);
        summary.peak_direction = Ok((ff.grid.theta[peak / np], ff.grid.phi[peak % np]));
        summary.hpbw_phi0 = err(beam(0.0));
        summary.hpbw_phi90 = err(beam(90.0));
        summary.aperture_efficiency = Ok(farfield::aperture_efficiency(gain[peak], area, ff.freq));
        summary.xpd_phi0 = err(farfield::xpd(ff, 0.0, pol));
        summary.xpd_phi90 = err(farfield::xpd(ff, 90.0, pol));
    }
    summary
}

fn show<T>(m: &Metric<T>, f: impl Fn(&T) -> String) -> String {
    match m {
        Ok(v) => f(v),
        Err(e) => format!("\"unavailable: {e}\""),
    }
}

impl MetricsSummary {
    /// `key = value` text; unavailable values are quoted reasons.
    pub fn render(&self) -> String {
        let mut out = String::from("# yeefield metrics summary\n");
        let _ = writeln!(out, "disclaimer = \"{}\"", self.disclaimer);
        for p in &self.ports {
            let _ = writeln!(
                out,
                "port{}_band_ghz = {}",
                p.port,
                show(&p.band, |b| format!("[{:.4}, {:.4}]", b.f_lo * 1e-9, b.f_hi * 1e-9))
            );
            let _ = writeln!(
                out,
                "port{}_bandwidth_ghz = {}",
                p.port,
                show(&p.band, |b| format!("{:.4}", b.bandwidth * 1e-9))
            );
        }
        let _ = writeln!(out, "mean_bandwidth_ghz = {}", show(&self.mean_bandwidth, |v| format!("{:.4}", v * 1e-9)));
        let _ = writeln!(out, "worst_isolation_db = {}", show(&self.worst_isolation, |v| format!("{:.3}", v.0)));
        let _ = writeln!(
            out,
            "worst_isolation_pair = {}",
            show(&self.worst_isolation, |v| format!("[{}, {}]", v.1, v.2))
        );
        let _ = writeln!(out, "peak_gain_dbi = {}", show(&self.peak_gain_dbi, |v| format!("{v:.3}")));
        let _ = writeln!(
            out,
            "peak_direction_deg = {}",
            show(&self.peak_direction, |v| format!("[{:.1}, {:.1}]", v.0, v.1))
        );
        let _ = writeln!(out, "hpbw_phi0_deg = {}", show(&self.hpbw_phi0, |v| format!("{v:.2}")));
        let _ = writeln!(out, "hpbw_phi90_deg = {}", show(&self.hpbw_phi90, |v| format!("{v:.2}")));
        let _ = writeln!(out, "aperture_efficiency = {}", show(&self.aperture_efficiency, |v| format!("{v:.4}")));
        let _ = writeln!(out, "xpd_phi0_db = {}", show(&self.xpd_phi0, |v| format!("{v:.2}")));
        let _ = writeln!(out, "xpd_phi90_db = {}", show(&self.xpd_phi90, |v| format!("{v:.2}")));
        for (p, c) in &self.converged {
            let _ = writeln!(out, "port{p}_converged = {c}");
        }
        out
    }
}

/// Analytic and FDTD phase curves of the unit cell with their bands.
#[derive(Debug)]
pub struct AmcRun {
    pub params: AmcCellParams,
    pub analytic: PhaseCurve,
    pub fdtd: Option<PhaseCurve>,
}

pub fn amc_freqs() -> Vec<f64> {
    network::freq_range(2e9, 16e9, 0.05e9)
}

pub fn run_amc(cfg: &SceneConfig, with_fdtd: bool) -> Result<AmcRun, ExperimentError> {
    let params = AmcCellParams::from_element(&cfg.params, cfg.amc_gap);
    params.validate()?;
    let freqs = amc_freqs();
    let analytic = analytic_curve(&params, &freqs);
    let fdtd = if with_fdtd {
        Some(reflection_phase_fdtd(&params, CellKind::Mushroom, &freqs, &FdtdPhaseOptions::default())?)
    } else {
        None
    };
    Ok(AmcRun { params, analytic, fdtd })
}

impl AmcRun {
    pub fn render_summary(&self) -> String {
        let band = |c: &PhaseCurve| match band_of(c) {
            Some((lo, hi)) => format!("[{:.4}, {:.4}]", lo * 1e-9, hi * 1e-9),
            None => "\"unavailable: no 0 deg crossing in the sweep\"".into(),
        };
        let mut out = String::from("# yeefield AMC summary\n");
        let _ = writeln!(out, "resonance_ghz = {:.4}", self.params.resonance() * 1e-9);
        let _ = writeln!(out, "analytic_band_ghz = {}", band(&self.analytic));
        if let Some(c) = &self.fdtd {
            let _ = writeln!(out, "fdtd_band_ghz = {}", band(c));
        }
        out
    }
}

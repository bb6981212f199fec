//! File-producing commands behind the `yeefield` binary: build, run,
//! metrics and sweep.

use crate::amc::{cell_scene, format_phase_csv, AmcCellParams, CellKind};
use crate::experiment::{self, AntennaRun, ExperimentError, MetricsSummary, RunOptions};
use crate::farfield::{self, AngleGrid, FarField};
use crate::mesh::{generate_mesh, MeshMode, MeshPolicy};
use crate::network::{self, read_touchstone, write_touchstone, TouchstoneError};
use crate::scene::{canonical_dump, validate_scene, ConfigError, Polarization, SceneConfig, ScenarioName};
use crate::solver::write_dump;
use num_complex::Complex64;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Touchstone(#[from] TouchstoneError),
    #[error("{path}: line {line}: {msg}")]
    Pattern { path: String, line: usize, msg: String },
    #[error("unknown sweep parameter `{name}`; valid: {valid}")]
    UnknownParameter { name: String, valid: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("run finished with errors:\n{0}")]
    RunFailed(String),
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load a config file (or defaults) and apply `key=value` overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<SceneConfig, CliError> {
    let mut cfg = match path {
        Some(p) => SceneConfig::parse(&fs::read_to_string(p).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        })?)?,
        None => SceneConfig::default(),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("override `{o}` is not key=value")))?;
        cfg.apply_override(k.trim(), v)?;
    }
    Ok(cfg)
}

/// `GHZ_START:GHZ_STOP:GHZ_STEP` to Hz.
pub fn parse_freqs(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Invalid(format!("bad frequency range `{s}`")))?;
    match parts[..] {
        [a, b, step] if a > 0.0 && b > a && step > 0.0 => Ok(network::freq_range(a * 1e9, b * 1e9, step * 1e9)),
        _ => Err(CliError::Invalid(format!("bad frequency range `{s}`"))),
    }
}

/// `START:STOP:COUNT` to evenly spaced values.
pub fn parse_range(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Invalid(format!("bad sweep range `{s}`, expected START:STOP:COUNT"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    match n {
        0 => Err(bad()),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn config_hash(cfg: &SceneConfig, scenario: ScenarioName, extra: &str) -> String {
    let text = format!("{scenario}\n{cfg:?}\n{extra}");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Scene dump and mesh statistics. Validation problems are errors.
pub fn cmd_build(cfg: &SceneConfig, scenario: ScenarioName, mode: MeshMode, out: &Path) -> Result<String, CliError> {
    mkdir(out)?;
    let (scene, grid) = if scenario == ScenarioName::AmcCell {
        let p = AmcCellParams::from_element(&cfg.params, cfg.amc_gap);
        let scene = cell_scene(&p, CellKind::Mushroom, 0.1e-3).map_err(ExperimentError::from)?;
        let grid = generate_mesh(&scene, &MeshPolicy::uniform(0.1e-3)).map_err(ExperimentError::from)?;
        (scene, grid)
    } else {
        let scene = cfg.build(scenario)?;
        let diags = validate_scene(&scene);
        if !diags.is_empty() {
            let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
            return Err(CliError::Invalid(text.join("\n")));
        }
        experiment::build(cfg, scenario, mode)?
    };
    write(&out.join("scene.txt"), &canonical_dump(&scene))?;
    write(&out.join("mesh.txt"), &grid.dump())?;
    let [nx, ny, nz] = grid.dims();
    let vias = scene.primitives.iter().filter(|p| p.tag == crate::scene::PrimitiveTag::FrameVia).count();
    Ok(format!(
        "{scenario}: {} ports, {} vias, {} primitives; grid {nx}x{ny}x{nz} = {} cells, dt {:.4e} s\n",
        scene.ports.len(),
        vias,
        scene.primitives.len(),
        grid.cell_count(),
        crate::mesh::cfl_timestep(&grid, 0.99)
    ))
}

/// Output file names inside a run directory.
pub fn touchstone_path(out: &Path, scenario: ScenarioName, nports: usize) -> PathBuf {
    out.join(format!("{scenario}.s{nports}p"))
}

pub const PATTERN_FILE: &str = "pattern.csv";

/// What `run` produced.
#[derive(Debug)]
pub struct RunReport {
    pub summary: String,
    pub errors: Vec<String>,
}

/// Run a scenario and write every artifact into `out`.
pub fn cmd_run(cfg: &SceneConfig, scenario: ScenarioName, opts: &RunOptions, out: &Path) -> Result<RunReport, CliError> {
    mkdir(out)?;
    if scenario == ScenarioName::AmcCell {
        return run_amc_files(cfg, out);
    }
    let run = experiment::run_antenna(cfg, scenario, opts)?;
    write_antenna_outputs(cfg, &run, opts, out)
}

fn run_amc_files(cfg: &SceneConfig, out: &Path) -> Result<RunReport, CliError> {
    let r = experiment::run_amc(cfg, true)?;
    let mut curves = vec![&r.analytic];
    if let Some(c) = &r.fdtd {
        curves.push(c);
    }
    write(&out.join("phase.csv"), &format_phase_csv(&curves))?;
    let summary = r.render_summary();
    write(&out.join("summary.txt"), &summary)?;
    let manifest = format!(
        "scenario = amc_cell\nconfig_sha256 = {}\nversion = {}\ncreated_unix = {}\n",
        config_hash(cfg, ScenarioName::AmcCell, ""),
        env!("CARGO_PKG_VERSION"),
        unix_now()
    );
    write(&out.join("manifest.txt"), &manifest)?;
    Ok(RunReport {
        summary,
        errors: vec![],
    })
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_antenna_outputs(cfg: &SceneConfig, run: &AntennaRun, opts: &RunOptions, out: &Path) -> Result<RunReport, CliError> {
    let rec_dir = out.join("recordings");
    mkdir(&rec_dir)?;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "scenario = {}", run.scenario);
    let _ = writeln!(
        manifest,
        "config_sha256 = {}",
        config_hash(cfg, run.scenario, &format!("{:?} {:?} {}", opts.mesh, opts.freqs, opts.pattern_freq))
    );
    let _ = writeln!(manifest, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "mesh_mode = {:?}", opts.mesh);
    let [nx, ny, nz] = run.grid.dims();
    let _ = writeln!(manifest, "grid = [{nx}, {ny}, {nz}]");
    let _ = writeln!(manifest, "cells = {}", run.grid.cell_count());
    let _ = writeln!(manifest, "dt = {:e}", run.dt);
    for e in &run.excitations {
        match &e.result {
            Ok((rec, _)) => {
                let path = rec_dir.join(format!("port{}.bin", e.port));
                write_dump(rec, &path).map_err(|er| CliError::Invalid(er.to_string()))?;
                let _ = writeln!(manifest, "port{}_steps = {}", e.port, rec.steps);
                let _ = writeln!(manifest, "port{}_converged = {}", e.port, rec.converged);
            }
            Err(err) => {
                let _ = writeln!(manifest, "port{}_error = \"{}\"", e.port, err);
            }
        }
    }
    let _ = writeln!(manifest, "created_unix = {}", unix_now());
    write(&out.join("manifest.txt"), &manifest)?;

    let mut ts_path = None;
    if let Some(s) = &run.smatrix {
        let path = touchstone_path(out, run.scenario, s.nports());
        write_touchstone(s, &path)?;
        // Convergence travels with the Touchstone file for `metrics`.
        let mut text = fs::read_to_string(&path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut flags = String::new();
        for (i, p) in s.ports.iter().enumerate() {
            if s.excited[i] {
                let _ = writeln!(flags, "! converged port {p} {}", s.converged[i]);
            }
        }
        text.insert_str(0, &flags);
        write(&path, &text)?;
        ts_path = Some(path);
    }
    let mut pat_path = None;
    if let Some(ff) = &run.pattern {
        match ff.accepted_power().map(|p| farfield::gain_pattern(ff, p)) {
            Some(Ok(gain)) => {
                let path = out.join(PATTERN_FILE);
                farfield::write_pattern_csv(ff, &gain, &path).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                for phi in [0.0, 90.0] {
                    let (a, v) = farfield::cut(ff, &gain, phi).map_err(ExperimentError::from)?;
                    let (ra, rv) = farfield::resample_cut(&a, &v, 0.5);
                    write(&out.join(format!("cut_phi{phi}.dat")), &farfield::format_polar_cut(&ra, &rv))?;
                }
                pat_path = Some(path);
            }
            Some(Err(e)) => return Err(ExperimentError::from(e).into()),
            None => {}
        }
    }
    let summary = cmd_metrics(
        ts_path.as_deref(),
        pat_path.as_deref(),
        footprint_area(&run.scene),
        opts.pattern_freq,
        run.polarization,
    )?;
    let text = summary.render();
    write(&out.join("summary.txt"), &text)?;
    Ok(RunReport {
        summary: text,
        errors: run.errors.clone(),
    })
}

pub fn footprint_area(scene: &crate::scene::Scene) -> f64 {
    let (lo, hi) = scene.footprint;
    (hi[0] - lo[0]) * (hi[1] - lo[1])
}

/// Default aperture area of a scenario's footprint (m²).
pub fn scenario_area(cfg: &SceneConfig, scenario: ScenarioName) -> Result<f64, CliError> {
    Ok(footprint_area(&cfg.build(scenario)?))
}

/// Parse a pattern CSV back into a far field and its gain column.
pub fn read_pattern_csv(path: &Path, freq: f64) -> Result<(FarField, Vec<f64>), CliError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: name.clone(),
        source,
    })?;
    let perr = |line: usize, msg: &str| CliError::Pattern {
        path: name.clone(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi,gain_dbi" => {}
        Some((i, _)) => return Err(perr(i + 1, "unexpected header")),
        None => return Err(perr(1, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = l
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| perr(i + 1, "not a number"))?;
        if v.len() != 7 {
            return Err(perr(i + 1, "expected 7 columns"));
        }
        rows.push(v);
    }
    if rows.is_empty() {
        return Err(perr(2, "no data rows"));
    }
    let mut theta: Vec<f64> = Vec::new();
    let mut phi: Vec<f64> = Vec::new();
    for r in &rows {
        if !theta.contains(&r[0]) {
            theta.push(r[0]);
        }
        if theta.len() == 1 {
            phi.push(r[1]);
        }
    }
    if theta.len() * phi.len() != rows.len() {
        return Err(perr(rows.len() + 1, "rows do not form a theta-major grid"));
    }
    let grid = AngleGrid { theta, phi };
    let e_theta = rows.iter().map(|r| Complex64::new(r[2], r[3])).collect();
    let e_phi = rows.iter().map(|r| Complex64::new(r[4], r[5])).collect();
    let gain = rows.iter().map(|r| r[6]).collect();
    let ff = FarField {
        freq,
        upper_half_only: false,
        grid,
        e_theta,
        e_phi,
        radiated_power: 0.0,
        port_waves: vec![],
    };
    Ok((ff, gain))
}

fn converged_flags(path: &Path) -> Vec<(usize, bool)> {
    let text = fs::read_to_string(path).unwrap_or_default();
    text.lines()
        .filter_map(|l| {
            let rest = l.strip_prefix("! converged port ")?;
            let (p, c) = rest.split_once(' ')?;
            Some((p.parse().ok()?, c.trim() == "true"))
        })
        .collect()
}

/// Metrics from files alone: a Touchstone file and/or a pattern CSV.
pub fn cmd_metrics(
    touchstone: Option<&Path>,
    pattern: Option<&Path>,
    area: f64,
    freq: f64,
    pol: Polarization,
) -> Result<MetricsSummary, CliError> {
    if !(area > 0.0) {
        return Err(CliError::Invalid("aperture area must be positive".into()));
    }
    let s = touchstone.map(read_touchstone).transpose()?;
    let conv = touchstone.map(converged_flags).unwrap_or_default();
    let pat = pattern.map(|p| read_pattern_csv(p, freq)).transpose()?;
    Ok(experiment::summarize(
        s.as_ref(),
        pat.as_ref().map(|(ff, g)| (ff, g.as_slice())),
        area,
        pol,
        conv,
    ))
}

/// Run the scenario once per parameter value into `out/point<i>` and
/// tabulate the summaries.
pub fn cmd_sweep(
    cfg: &SceneConfig,
    scenario: ScenarioName,
    param: &str,
    values: &[f64],
    opts: &RunOptions,
    out: &Path,
) -> Result<String, CliError> {
    let keys = SceneConfig::override_keys();
    if !keys.iter().any(|k| k == param) {
        return Err(CliError::UnknownParameter {
            name: param.to_string(),
            valid: keys.join(", "),
        });
    }
    mkdir(out)?;
    let mut table = String::new();
    if scenario == ScenarioName::AmcCell {
        let _ = writeln!(
            table,
            "{param},resonance_ghz,analytic_lo_ghz,analytic_hi_ghz,fdtd_lo_ghz,fdtd_hi_ghz"
        );
    } else {
        let _ = writeln!(
            table,
            "{param},mean_bandwidth_ghz,worst_isolation_db,peak_gain_dbi,hpbw_phi0_deg,hpbw_phi90_deg,aperture_efficiency,xpd_phi0_db,xpd_phi90_db"
        );
    }
    let mut failures = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let mut c = cfg.clone();
        c.apply_override(param, &format!("{v}"))?;
        let dir = out.join(format!("point{i}"));
        if scenario == ScenarioName::AmcCell {
            mkdir(&dir)?;
            run_amc_files(&c, &dir)?;
            let run = experiment::run_amc(&c, false)?;
            let a = crate::amc::band_of(&run.analytic);
            let fdtd = fs::read_to_string(dir.join("phase.csv")).ok().and_then(|t| fdtd_band(&t));
            let cell = |b: Option<(f64, f64)>, hi: bool| {
                b.map(|b| format!("{:.4}", if hi { b.1 } else { b.0 } * 1e-9)).unwrap_or_else(|| "NA".into())
            };
            let _ = writeln!(
                table,
                "{v},{:.4},{},{},{},{}",
                run.params.resonance() * 1e-9,
                cell(a, false),
                cell(a, true),
                cell(fdtd, false),
                cell(fdtd, true)
            );
        } else {
            let report = cmd_run(&c, scenario, opts, &dir)?;
            failures.extend(report.errors.iter().map(|e| format!("point {i}: {e}")));
            let s = cmd_metrics(
                Some(&touchstone_path(&dir, scenario, c.build(scenario)?.ports.len())),
                Some(&dir.join(PATTERN_FILE)).filter(|p| p.exists()).map(|p| p.as_path()),
                scenario_area(&c, scenario)?,
                opts.pattern_freq,
                opts.weights.polarization(&(1..=c.build(scenario)?.ports.len()).collect::<Vec<_>>()),
            )?;
            let f = |m: &Result<f64, String>, scale: f64| m.as_ref().map(|v| format!("{:.4}", v * scale)).unwrap_or_else(|_| "NA".into());
            let _ = writeln!(
                table,
                "{v},{},{},{},{},{},{},{},{}",
                f(&s.mean_bandwidth, 1e-9),
                f(&s.worst_isolation.clone().map(|w| w.0), 1.0),
                f(&s.peak_gain_dbi, 1.0),
                f(&s.hpbw_phi0, 1.0),
                f(&s.hpbw_phi90, 1.0),
                f(&s.aperture_efficiency, 1.0),
                f(&s.xpd_phi0, 1.0),
                f(&s.xpd_phi90, 1.0)
            );
        }
    }
    write(&out.join("sweep.csv"), &table)?;
    if !failures.is_empty() {
        return Err(CliError::RunFailed(failures.join("\n")));
    }
    Ok(table)
}

fn fdtd_band(phase_csv: &str) -> Option<(f64, f64)> {
    let mut freqs = Vec::new();
    let mut phase = Vec::new();
    for l in phase_csv.lines().skip(1) {
        let cols: Vec<&str> = l.split(',').collect();
        if cols.len() == 3 && cols[2] == "fdtd" {
            freqs.push(cols[0].parse::<f64>().ok()? * 1e9);
            phase.push(cols[1].parse::<f64>().ok()?);
        }
    }
    crate::amc::band_of(&crate::amc::PhaseCurve {
        freqs,
        phase_deg: phase,
        model: crate::amc::PhaseModel::Fdtd,
    })
}

//! Self-contained numerical experiments with known answers. They back the
//! acceptance suite and double as solver health checks.

use crate::constants::{C0, ETA0};
use crate::mesh::{generate_mesh, MeshError, MeshMode, MeshPolicy, YeeGrid};
use crate::network::{self, db20, dft, NetworkError};
use crate::scene::{
    Boundary, Material, Polarization, PortDef, Primitive, PrimitiveTag, Scene, SceneError, Shape,
};
use crate::solver::{
    run, Component, CpmlSpec, Drive, Excitation, HuygensRecord, HuygensSample, Probe, RunControl, Simulation,
    SolverError,
};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Laterally periodic vacuum column `height` tall with `lateral` cells
/// across and the given floor and top boundaries.
pub fn vacuum_column(cell: f64, height: f64, lateral: usize, floor: Boundary, top: Boundary) -> Scene {
    let w = cell * lateral as f64;
    Scene {
        materials: vec![Material::pec()],
        primitives: vec![],
        ports: vec![],
        bounds: ([0.0; 3], [w, w, height]),
        boundaries: [
            Boundary::Periodic,
            Boundary::Periodic,
            Boundary::Periodic,
            Boundary::Periodic,
            floor,
            top,
        ],
        footprint: ([0.0, 0.0], [w, w]),
        f0: 28e9,
    }
}

fn column_grid(cell: f64, height: f64, cpml: usize) -> Result<YeeGrid, MeshError> {
    let policy = MeshPolicy {
        pml_cells: cpml,
        ..MeshPolicy::uniform(cell)
    };
    generate_mesh(&vacuum_column(cell, height, 2, Boundary::Open, Boundary::Open), &policy)
}

/// Normal-incidence reflection of the CPML on top of a vacuum column, in dB
/// per frequency.
///
/// A current sheet launches a plane wave toward the layer. The reflected
/// field is the difference between the probe signal of the test column and
/// of a column tall enough that its own termination stays outside the time
/// window.
pub fn cpml_reflection(cpml: &CpmlSpec, cell: f64, freqs: &[f64]) -> Result<Vec<f64>, ValidationError> {
    // Positions in cells above the bottom of the physical column. The floor
    // is absorbing too; its echo is identical in both runs and cancels.
    let (source_k, probe_k, top_k) = (10, 30, 50);
    let exc = Excitation::antenna_default();
    let short = column_grid(cell, top_k as f64 * cell, cpml.thickness)?;
    // Window: the pulse passing the probe, then its echo off the test layer.
    let travel = (2 * top_k - source_k - probe_k) as f64 * cell / C0;
    let window = exc.duration() + travel;
    let tall_k = top_k + (window * C0 / cell / 2.0).ceil() as usize + 10;
    let tall = column_grid(cell, tall_k as f64 * cell, cpml.thickness)?;

    let record = |grid: &YeeGrid| -> Result<(Vec<f64>, f64), ValidationError> {
        let dt = crate::mesh::cfl_timestep(grid, 0.99);
        let pad = grid.pml_cells[4];
        let control = RunControl {
            max_steps: (window / dt).ceil() as usize,
            probes: vec![Probe::PlaneMean {
                comp: Component::Ex,
                k: pad + probe_k,
            }],
            ..RunControl::default()
        };
        let rec = run(grid, cpml, Drive::SheetX { k: pad + source_k }, &exc, &control)?;
        Ok((rec.probes[0].clone(), rec.dt))
    };
    let (test, dt) = record(&short)?;
    let (reference, _) = record(&tall)?;
    let n = test.len().min(reference.len());
    let diff: Vec<f64> = test[..n].iter().zip(&reference[..n]).map(|(a, b)| a - b).collect();
    Ok(freqs
        .iter()
        .map(|&f| db20(dft(&diff, dt, 0.0, f).norm() / dft(&reference[..n], dt, 0.0, f).norm()))
        .collect())
}

/// Relative change of the stored energy in a closed lossless PEC box over
/// `steps` steps, starting once the sheet source has switched off.
pub fn energy_drift(steps: usize) -> Result<f64, ValidationError> {
    let scene = Scene {
        materials: vec![Material::pec()],
        primitives: vec![],
        ports: vec![],
        bounds: ([0.0; 3], [6e-3, 5e-3, 4e-3]),
        boundaries: [Boundary::Pec; 6],
        footprint: ([0.0, 0.0], [6e-3, 5e-3]),
        f0: 28e9,
    };
    let grid = generate_mesh(&scene, &MeshPolicy::uniform(0.25e-3))?;
    let mut sim = Simulation::new(&grid, &CpmlSpec::default(), 0.99)?;
    let exc = Excitation::antenna_default();
    sim.set_drive(Drive::SheetX { k: grid.dims()[2] / 3 }, exc)?;
    while (sim.step_index() as f64) * sim.dt() <= exc.duration() {
        sim.step()?;
    }
    let w0 = sim.energy();
    for _ in 0..steps {
        sim.step()?;
    }
    Ok((sim.energy() - w0) / w0)
}

/// Exact fields of a z-directed Hertzian dipole with moment `il` at `origin`.
pub fn dipole_fields(origin: [f64; 3], il: Complex64, freq: f64, p: [f64; 3]) -> ([Complex64; 3], [Complex64; 3]) {
    let k = 2.0 * PI * freq / C0;
    let d = [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let rho = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let (st, ct) = (rho / r, d[2] / r);
    let (cp, sp) = if rho > 0.0 { (d[0] / rho, d[1] / rho) } else { (1.0, 0.0) };
    let j = Complex64::i();
    let g = (-j * k * r).exp() / r;
    let kr = k * r;
    let e_r = il * ETA0 * ct / (2.0 * PI * r) * (1.0 + 1.0 / (j * kr)) * g;
    let e_t = j * il * ETA0 * k * st / (4.0 * PI) * (1.0 + 1.0 / (j * kr) - 1.0 / (kr * kr)) * g;
    let h_p = j * il * k * st / (4.0 * PI) * (1.0 + 1.0 / (j * kr)) * g;
    let e = [
        e_r * st * cp + e_t * ct * cp,
        e_r * st * sp + e_t * ct * sp,
        e_r * ct - e_t * st,
    ];
    let h = [-h_p * sp, h_p * cp, Complex64::default()];
    (e, h)
}

/// Huygens record on a cube of half-width `a` centred on the origin, `n`
/// cells per edge, sampling the superposed fields of `dipoles`.
pub fn dipole_record(dipoles: &[([f64; 3], Complex64)], freq: f64, a: f64, n: usize) -> HuygensRecord {
    let h = 2.0 * a / n as f64;
    let mut samples = Vec::new();
    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [-1.0, 1.0] {
            for ib in 0..n {
                for ic in 0..n {
                    let mut pos = [0.0; 3];
                    pos[axis] = side * a;
                    pos[b] = -a + (ib as f64 + 0.5) * h;
                    pos[c] = -a + (ic as f64 + 0.5) * h;
                    let mut normal = [0.0; 3];
                    normal[axis] = side;
                    let mut e = [Complex64::default(); 3];
                    let mut hh = [Complex64::default(); 3];
                    for &(o, il) in dipoles {
                        let (de, dh) = dipole_fields(o, il, freq, pos);
                        for q in 0..3 {
                            e[q] += de[q];
                            hh[q] += dh[q];
                        }
                    }
                    // Keep tangential parts only, as the solver does.
                    e[axis] = Complex64::default();
                    hh[axis] = Complex64::default();
                    samples.push(HuygensSample {
                        pos,
                        normal,
                        area: h * h,
                        e: vec![e],
                        h: vec![hh],
                    });
                }
            }
        }
    }
    HuygensRecord {
        freqs: vec![freq],
        ground_image: false,
        samples,
    }
}

/// Rectangular patch of length `l` (along x) and width `w` on a grounded
/// slab, fed by a probe `inset` from the patch center.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplePatch {
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub eps_r: f64,
    pub inset: f64,
}

impl Default for SimplePatch {
    fn default() -> Self {
        Self {
            l: 3.0e-3,
            w: 4.0e-3,
            h: 0.25e-3,
            eps_r: 3.5,
            inset: 0.75e-3,
        }
    }
}

impl SimplePatch {
    /// Hammerstad effective permittivity.
    pub fn eps_eff(&self) -> f64 {
        let (e, u) = (self.eps_r, self.w / self.h);
        (e + 1.0) / 2.0 + (e - 1.0) / 2.0 / (1.0 + 12.0 / u).sqrt()
    }

    /// Hammerstad open-end extension of each radiating edge.
    pub fn delta_l(&self) -> f64 {
        let (ee, u) = (self.eps_eff(), self.w / self.h);
        0.412 * self.h * (ee + 0.3) * (u + 0.264) / ((ee - 0.258) * (u + 0.8))
    }

    /// TM010 cavity estimate `c / (2 (L + 2ΔL) sqrt(eps_eff))`.
    pub fn cavity_resonance(&self) -> f64 {
        C0 / (2.0 * (self.l + 2.0 * self.delta_l()) * self.eps_eff().sqrt())
    }

    pub fn scene(&self) -> Result<Scene, SceneError> {
        let f0 = self.cavity_resonance();
        let hw = self.l.max(self.w) / 2.0 + 3.0 * self.h.max(0.5e-3);
        let margin = C0 / f0 / 4.0;
        let ext = hw + margin;
        let materials = vec![Material::dielectric("substrate", self.eps_r, 0.0)?, Material::pec()];
        let plate = |x: [f64; 2], y: [f64; 2], z: f64, tag| Primitive {
            shape: Shape::Plate { x, y, z },
            material: 1,
            priority: 10,
            tag,
        };
        Ok(Scene {
            materials,
            primitives: vec![
                Primitive {
                    shape: Shape::Box {
                        min: [-hw, -hw, 0.0],
                        max: [hw, hw, self.h],
                    },
                    material: 0,
                    priority: 0,
                    tag: PrimitiveTag::Substrate,
                },
                plate([-hw, hw], [-hw, hw], 0.0, PrimitiveTag::Ground),
                plate(
                    [-self.l / 2.0, self.l / 2.0],
                    [-self.w / 2.0, self.w / 2.0],
                    self.h,
                    PrimitiveTag::Radiator,
                ),
            ],
            ports: vec![PortDef {
                index: 1,
                position: [-self.inset, 0.0],
                z: [0.0, self.h],
                polarization: Polarization::X,
                impedance: 50.0,
            }],
            bounds: ([-ext, -ext, 0.0], [ext, ext, self.h + margin]),
            boundaries: [
                Boundary::Open,
                Boundary::Open,
                Boundary::Open,
                Boundary::Open,
                Boundary::Pec,
                Boundary::Open,
            ],
            footprint: ([-hw, -hw], [hw, hw]),
            f0,
        })
    }
}

/// Frequency of peak input resistance of the probe-fed patch, found by FDTD
/// over `freqs`.
pub fn patch_resonance(patch: &SimplePatch, mode: MeshMode, freqs: &[f64]) -> Result<f64, ValidationError> {
    let scene = patch.scene()?;
    let policy = match mode {
        MeshMode::Coarse => MeshPolicy::coarse(&scene),
        MeshMode::Fine => MeshPolicy::fine(&scene),
    };
    let grid = generate_mesh(&scene, &policy)?;
    let rec = run(&grid, &CpmlSpec::default(), Drive::Port(1), &Excitation::antenna_default(), &RunControl::default())?;
    let s = network::extract_sparams(&[rec], freqs, false)?;
    let z0 = s.z0;
    let r_in: Vec<f64> = s
        .trace(1, 1)?
        .iter()
        .map(|g| (z0 * (1.0 + g) / (1.0 - g)).re)
        .collect();
    let best = (0..r_in.len()).max_by(|&a, &b| r_in[a].total_cmp(&r_in[b])).unwrap_or(0);
    Ok(freqs[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::freq_range;

    #[test]
    fn cpml_reflection_is_small() {
        let r = cpml_reflection(&CpmlSpec::default(), 0.25e-3, &freq_range(22e9, 34e9, 1e9)).unwrap();
        assert!(r.iter().all(|&x| x < -60.0), "{r:?}");
    }

    #[test]
    fn measurement_sees_a_weak_layer() {
        let weak = CpmlSpec {
            sigma_scale: 0.01,
            kappa_max: 1.0,
            ..CpmlSpec::default()
        };
        let r = cpml_reflection(&weak, 0.25e-3, &freq_range(22e9, 34e9, 4e9)).unwrap();
        assert!(r.iter().all(|&x| x > -20.0), "{r:?}");
    }
}

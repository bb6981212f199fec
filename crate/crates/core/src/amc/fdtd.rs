use super::{AmcCellParams, AmcError, PhaseCurve, PhaseModel};
use crate::constants::C0;
use crate::mesh::{cfl_timestep, generate_mesh, MeshPolicy};
use crate::network::dft;
use crate::scene::{Boundary, Material, Primitive, PrimitiveTag, Scene, Shape};
use crate::solver::{run, Component, CpmlSpec, Drive, Excitation, Probe, RunControl};
use num_complex::Complex64;
use std::f64::consts::PI;

/// What sits on the PEC floor of the periodic column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Metal up to the reference plane; calibration case.
    Pec,
    /// Grounded dielectric slab without metal on top.
    Slab,
    /// Slab, centered patch and via.
    Mushroom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdtdPhaseOptions {
    /// Uniform cell size.
    pub cell: f64,
    /// Extra settling time after the pulse has passed the probes (s).
    pub settle: f64,
}

impl Default for FdtdPhaseOptions {
    fn default() -> Self {
        Self {
            cell: 0.1e-3,
            settle: 1.0e-9,
        }
    }
}

/// Heights (above the floor) of the two probe planes and the source sheet.
fn column_layout(p: &AmcCellParams, kind: CellKind, cell: f64) -> (f64, f64, f64, f64) {
    // Floquet harmonics of the cell decay like exp(-2π z / period); start
    // the probes where they are negligible.
    let clear = if kind == CellKind::Mushroom { 1.5 * p.period() } else { 10.0 * cell };
    let z1 = p.h + (clear / cell).ceil() * cell;
    let z2 = z1 + (3e-3 / cell).ceil() * cell;
    let src = z2 + 10.0 * cell;
    // The open face keeps a quarter wavelength of air at the resonance.
    let quarter = C0 / p.resonance() / 4.0;
    let top = (src + 10.0 * cell).max(((p.h + quarter) / cell).ceil() * cell);
    (z1, z2, src, top)
}

/// Periodic unit-cell scene of `kind`, laterally one period wide (two cells
/// for the laterally uniform kinds), PEC floor and open top.
pub fn cell_scene(p: &AmcCellParams, kind: CellKind, cell: f64) -> Result<Scene, AmcError> {
    p.validate()?;
    let width = if kind == CellKind::Mushroom { p.period() } else { 2.0 * cell };
    let (.., top) = column_layout(p, kind, cell);
    let mut materials = vec![Material::pec()];
    let mut primitives = Vec::new();
    match kind {
        CellKind::Pec => primitives.push(Primitive {
            shape: Shape::Box {
                min: [0.0; 3],
                max: [width, width, p.h],
            },
            material: 0,
            priority: 10,
            tag: PrimitiveTag::Ground,
        }),
        CellKind::Slab | CellKind::Mushroom => {
            materials.push(
                Material::dielectric("substrate", p.eps_r, 0.0)
                    .map_err(|e| AmcError::InvalidParams(e.to_string()))?,
            );
            primitives.push(Primitive {
                shape: Shape::Box {
                    min: [0.0; 3],
                    max: [width, width, p.h],
                },
                material: 1,
                priority: 0,
                tag: PrimitiveTag::Substrate,
            });
        }
    }
    if kind == CellKind::Mushroom {
        let c = width / 2.0;
        let half = p.w / 2.0;
        primitives.push(Primitive {
            shape: Shape::Plate {
                x: [c - half, c + half],
                y: [c - half, c + half],
                z: p.h,
            },
            material: 0,
            priority: 10,
            tag: PrimitiveTag::FramePlate,
        });
        primitives.push(Primitive {
            shape: Shape::Cylinder {
                center: [c, c],
                radius: p.via_radius.max(cell / 2.0),
                z0: 0.0,
                z1: p.h,
            },
            material: 0,
            priority: 10,
            tag: PrimitiveTag::FrameVia,
        });
    }
    Ok(Scene {
        materials,
        primitives,
        ports: vec![],
        bounds: ([0.0; 3], [width, width, top]),
        boundaries: [
            Boundary::Periodic,
            Boundary::Periodic,
            Boundary::Periodic,
            Boundary::Periodic,
            Boundary::Pec,
            Boundary::Open,
        ],
        footprint: ([0.0, 0.0], [width, width]),
        f0: p.resonance(),
    })
}

/// Normal-incidence reflection phase at the top of the slab.
///
/// A current sheet launches a plane wave toward the cell. The total field
/// on two vacuum planes is split into incident and reflected waves using
/// the grid's own dispersion relation, so the de-embedding to the reference
/// plane is exact for a lattice plane wave.
pub fn reflection_phase_fdtd(
    p: &AmcCellParams,
    kind: CellKind,
    freqs: &[f64],
    opts: &FdtdPhaseOptions,
) -> Result<PhaseCurve, AmcError> {
    if freqs.is_empty() || freqs[0] <= 0.0 || freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AmcError::BadFrequencies);
    }
    let cell = opts.cell;
    let scene = cell_scene(p, kind, cell)?;
    let grid = generate_mesh(&scene, &MeshPolicy::uniform(cell))?;
    let (z1, z2, src, top) = column_layout(p, kind, cell);
    let k_of = |z: f64| grid.nearest_line(2, z);
    let (k_ref, k1, k2) = (k_of(p.h), k_of(z1), k_of(z2));
    let l = &grid.lines[2];
    let dz = (l[k2] - l[k_ref]) / (k2 - k_ref) as f64;
    if (k_ref..k2).any(|k| ((l[k + 1] - l[k]) - dz).abs() > 1e-6 * dz) {
        return Err(AmcError::InvalidParams(format!(
            "slab height {} is not a multiple of the cell {cell}",
            p.h
        )));
    }
    let (f_lo, f_hi) = (freqs[0], freqs[freqs.len() - 1]);
    let exc = Excitation::gaussian_sine(0.5 * (f_lo + f_hi), 0.6 * (f_hi - f_lo).max(0.2 * f_hi));
    let dt = cfl_timestep(&grid, 0.99);
    let t_end = exc.duration() + 2.0 * top / C0 + opts.settle;
    let control = RunControl {
        max_steps: (t_end / dt).ceil() as usize,
        probes: vec![
            Probe::PlaneMean {
                comp: Component::Ex,
                k: k1,
            },
            Probe::PlaneMean {
                comp: Component::Ex,
                k: k2,
            },
        ],
        ..RunControl::default()
    };
    let rec = run(&grid, &CpmlSpec::default(), Drive::SheetX { k: k_of(src) }, &exc, &control)?;
    let (d1, d2) = (l[k1] - l[k_ref], l[k2] - l[k_ref]);
    let j = Complex64::i();
    let phase_deg = freqs
        .iter()
        .map(|&f| {
            let e1 = dft(&rec.probes[0], rec.dt, 1.0, f);
            let e2 = dft(&rec.probes[1], rec.dt, 1.0, f);
            // Lattice wavenumber for normal incidence.
            let k = 2.0 / dz * (dz / (C0 * rec.dt) * (PI * f * rec.dt).sin()).asin();
            // E(d) = A exp(jkd) + B exp(-jkd), d measured up from the reference.
            let det = 2.0 * j * (k * (d1 - d2)).sin();
            let a = (e1 * (-j * k * d2).exp() - e2 * (-j * k * d1).exp()) / det;
            let b = (e2 * (j * k * d1).exp() - e1 * (j * k * d2).exp()) / det;
            let ph = (b / a).arg().to_degrees();
            if ph <= -180.0 {
                ph + 360.0
            } else {
                ph
            }
        })
        .collect();
    Ok(PhaseCurve {
        freqs: freqs.to_vec(),
        phase_deg,
        model: PhaseModel::Fdtd,
    })
}

//! Scene to nonuniform Yee grid: coordinate lines, per-edge materials,
//! port columns and the stable timestep.

mod lines;

use crate::constants::{wavelength, C0, EPS0};
use crate::scene::{Boundary, Polarization, Scene, Shape};
use lines::{check_fine, dedup, fill, widen_clusters, FixedCoord};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshMode {
    /// Sub-cell gaps are widened to one cell and the distortion recorded.
    Coarse,
    /// Every interface is a grid line; too-small features are errors.
    Fine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshPolicy {
    pub max_cell: f64,
    pub min_cell: f64,
    pub grading_ratio: f64,
    pub min_cells_per_feature: usize,
    pub courant: f64,
    pub mode: MeshMode,
    /// Absorbing-layer padding added outside every open face.
    pub pml_cells: usize,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        Self {
            max_cell: wavelength(28e9) / 3.5f64.sqrt() / 15.0,
            min_cell: 0.1e-3,
            grading_ratio: 1.3,
            min_cells_per_feature: 1,
            courant: 0.99,
            mode: MeshMode::Coarse,
            pml_cells: 10,
        }
    }
}

fn densest_eps(scene: &Scene) -> f64 {
    scene
        .materials
        .iter()
        .filter(|m| !m.is_pec())
        .map(|m| m.eps_r)
        .fold(1.0, f64::max)
}

impl MeshPolicy {
    /// lambda/15 in the densest dielectric, sub-cell gaps widened.
    pub fn coarse(scene: &Scene) -> Self {
        let max_cell = wavelength(scene.f0) / densest_eps(scene).sqrt() / 15.0;
        Self {
            max_cell,
            min_cell: max_cell / 3.5,
            ..Self::default()
        }
    }

    /// Resolves every feature of the default element with two cells.
    pub fn fine(scene: &Scene) -> Self {
        let max_cell = wavelength(scene.f0) / densest_eps(scene).sqrt() / 20.0;
        Self {
            max_cell,
            min_cell: 12.5e-6,
            min_cells_per_feature: 2,
            mode: MeshMode::Fine,
            ..Self::default()
        }
    }

    /// Uniform cells of size `cell` wherever the geometry allows.
    pub fn uniform(cell: f64) -> Self {
        Self {
            max_cell: cell,
            min_cell: cell,
            grading_ratio: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |reason: &str| Err(MeshError::InvalidPolicy(reason.to_string()));
        if !(self.min_cell > 0.0 && self.min_cell <= self.max_cell) {
            return bad("need 0 < min_cell <= max_cell");
        }
        if !(self.grading_ratio >= 1.0) {
            return bad("grading_ratio must be >= 1");
        }
        if !(self.courant > 0.0 && self.courant <= 1.0) {
            return bad("courant must lie in (0, 1]");
        }
        if self.min_cells_per_feature == 0 {
            return bad("min_cells_per_feature must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("invalid mesh policy: {0}")]
    InvalidPolicy(String),
    #[error("unmeshable feature of {:.4} mm on axis {axis} (primitive {primitive:?}) with min_cell {:.4} mm", size * 1e3, min_cell * 1e3)]
    UnmeshableFeature {
        primitive: Option<usize>,
        axis: usize,
        size: f64,
        min_cell: f64,
    },
    #[error("scene is invalid: {0}")]
    InvalidScene(String),
    #[error("port {0} feed collapses to zero length on the grid")]
    DegeneratePort(usize),
}

/// Update-relevant material of one E-edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMaterial {
    pub eps_r: f64,
    /// Conductivity (S/m).
    pub sigma: f64,
    pub pec: bool,
}

/// Port column on the grid: one gap edge at the ground end plus wire edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPort {
    pub index: usize,
    pub node: [usize; 2],
    pub gap_edges: Vec<usize>,
    pub wire_edges: Vec<usize>,
    pub polarization: Polarization,
    pub impedance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapRecord {
    pub primitive: usize,
    /// Largest displacement of any of the primitive's coordinates (m).
    pub error: f64,
    /// Local cell size at the worst coordinate (m).
    pub local_cell: f64,
}

pub const VACUUM: u16 = 0;
pub const PEC: u16 = 1;

#[derive(Debug, Clone)]
pub struct YeeGrid {
    /// Node coordinates per axis, strictly increasing (m).
    pub lines: [Vec<f64>; 3],
    pub boundaries: [Boundary; 6],
    /// Absorbing cells on each face, in `boundaries` order.
    pub pml_cells: [usize; 6],
    /// Coefficient table; index 0 is vacuum, 1 is PEC.
    pub materials: Vec<EdgeMaterial>,
    /// Per-component E-edge material index, node-indexed.
    pub edge_material: [Vec<u16>; 3],
    pub ports: Vec<GridPort>,
    pub snap_report: Vec<SnapRecord>,
    /// Bounding box of everything except the ground (m).
    pub structure_bbox: Option<([f64; 3], [f64; 3])>,
    pub f0: f64,
    pub mode: MeshMode,
}

impl YeeGrid {
    pub fn dims(&self) -> [usize; 3] {
        [self.lines[0].len(), self.lines[1].len(), self.lines[2].len()]
    }

    pub fn node_count(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.dims().iter().map(|n| n.saturating_sub(1)).product()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.dims();
        i + nx * (j + ny * k)
    }

    /// Smallest cell per axis.
    pub fn min_cells(&self) -> [f64; 3] {
        let m = |l: &Vec<f64>| l.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        [m(&self.lines[0]), m(&self.lines[1]), m(&self.lines[2])]
    }

    /// Index of the line nearest to `x` on `axis`.
    pub fn nearest_line(&self, axis: usize, x: f64) -> usize {
        nearest(&self.lines[axis], x)
    }

    pub fn edge_material(&self, comp: usize, i: usize, j: usize, k: usize) -> EdgeMaterial {
        self.materials[self.edge_material[comp][self.idx(i, j, k)] as usize]
    }

    pub fn pec_edge_count(&self) -> usize {
        self.edge_material.iter().map(|m| m.iter().filter(|&&v| v == PEC).count()).sum()
    }

    /// Plain-text listing of lines and per-material edge counts.
    pub fn dump(&self) -> String {
        let mut out = String::from("# yeefield mesh v1\n");
        let [nx, ny, nz] = self.dims();
        let _ = writeln!(out, "dims {nx} {ny} {nz}");
        let _ = writeln!(out, "cells {}", self.cell_count());
        let _ = writeln!(out, "pml {:?}", self.pml_cells);
        for (a, name) in ["x", "y", "z"].iter().enumerate() {
            let l: Vec<String> = self.lines[a].iter().map(|v| format!("{:.6}", v * 1e3 + 0.0)).collect();
            let _ = writeln!(out, "lines_{name}_mm {}", l.join(" "));
        }
        for (m, mat) in self.materials.iter().enumerate() {
            let count: usize = self
                .edge_material
                .iter()
                .map(|e| e.iter().filter(|&&v| v as usize == m).count())
                .sum();
            let _ = writeln!(
                out,
                "material {m} eps_r={:.6} sigma={:.6e} pec={} edges={count}",
                mat.eps_r, mat.sigma, mat.pec
            );
        }
        for s in &self.snap_report {
            let _ = writeln!(
                out,
                "snap primitive={} error_mm={:.6} cell_mm={:.6}",
                s.primitive,
                s.error * 1e3,
                s.local_cell * 1e3
            );
        }
        out
    }
}

pub(crate) fn nearest(lines: &[f64], x: f64) -> usize {
    let i = lines.partition_point(|&v| v < x);
    if i == 0 {
        0
    } else if i >= lines.len() {
        lines.len() - 1
    } else if (x - lines[i - 1]) <= (lines[i] - x) {
        i - 1
    } else {
        i
    }
}

/// Loss tangent to an equivalent conductivity at frequency `f0`.
pub fn conductivity_from_tan_delta(eps_r: f64, tan_delta: f64, f0: f64) -> f64 {
    2.0 * std::f64::consts::PI * f0 * EPS0 * eps_r * tan_delta
}

/// Largest stable timestep for the smallest cell on each axis.
pub fn cfl_timestep(grid: &YeeGrid, courant: f64) -> f64 {
    let [dx, dy, dz] = grid.min_cells();
    courant / (C0 * (1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz)).sqrt())
}

fn primitive_coords(scene: &Scene, mode: MeshMode) -> [Vec<FixedCoord>; 3] {
    let mut out: [Vec<FixedCoord>; 3] = Default::default();
    let mut push = |axis: usize, pos: f64, owner: Option<usize>| {
        out[axis].push(FixedCoord {
            pos,
            owners: owner.into_iter().collect(),
            anchored: false,
        })
    };
    let (lo, hi) = scene.bounds;
    for a in 0..3 {
        push(a, lo[a], None);
        push(a, hi[a], None);
    }
    for (idx, p) in scene.primitives.iter().enumerate() {
        match p.shape {
            Shape::Box { min, max } => {
                for a in 0..3 {
                    push(a, min[a], Some(idx));
                    push(a, max[a], Some(idx));
                }
            }
            Shape::Plate { x, y, z } => {
                push(0, x[0], Some(idx));
                push(0, x[1], Some(idx));
                push(1, y[0], Some(idx));
                push(1, y[1], Some(idx));
                push(2, z, Some(idx));
            }
            Shape::Cylinder { center, radius, z0, z1 } => {
                for a in 0..2 {
                    push(a, center[a], Some(idx));
                    if mode == MeshMode::Fine {
                        push(a, center[a] - radius, Some(idx));
                        push(a, center[a] + radius, Some(idx));
                    }
                }
                push(2, z0, Some(idx));
                push(2, z1, Some(idx));
            }
        }
    }
    for port in &scene.ports {
        push(0, port.position[0], None);
        push(1, port.position[1], None);
        push(2, port.z[0], None);
        push(2, port.z[1], None);
    }
    // Domain bounds never move.
    for (a, axis) in out.iter_mut().enumerate() {
        for c in axis.iter_mut() {
            if (c.pos - lo[a]).abs() < 1e-12 || (c.pos - hi[a]).abs() < 1e-12 {
                c.anchored = true;
            }
        }
    }
    out
}

/// Mesh a scene. Open faces receive `policy.pml_cells` of absorbing padding.
pub fn generate_mesh(scene: &Scene, policy: &MeshPolicy) -> Result<YeeGrid, MeshError> {
    policy.validate()?;
    let diags = crate::scene::validate_scene(scene);
    if let Some(d) = diags.first() {
        return Err(MeshError::InvalidScene(d.to_string()));
    }

    let coords = primitive_coords(scene, policy.mode);
    let mut lines: [Vec<f64>; 3] = Default::default();
    // Original coordinate -> placed coordinate, per axis.
    let mut placement: [Vec<(f64, f64)>; 3] = Default::default();
    for a in 0..3 {
        let fixed = dedup(coords[a].clone());
        let placed: Vec<f64> = match policy.mode {
            MeshMode::Fine => {
                check_fine(&fixed, policy, a)?;
                fixed.iter().map(|c| c.pos).collect()
            }
            MeshMode::Coarse => widen_clusters(&fixed, policy.min_cell),
        };
        placement[a] = fixed.iter().map(|c| c.pos).zip(placed.iter().copied()).collect();
        let mut l = fill(&placed, policy, policy.mode == MeshMode::Fine);
        pad(&mut l, scene.boundaries[2 * a], scene.boundaries[2 * a + 1], policy.pml_cells);
        lines[a] = l;
    }
    let mut pml_cells = [0usize; 6];
    for (f, b) in scene.boundaries.iter().enumerate() {
        if *b == Boundary::Open {
            pml_cells[f] = policy.pml_cells;
        }
    }

    let snap = |a: usize, x: f64| -> f64 {
        placement[a]
            .iter()
            .find(|(orig, _)| (orig - x).abs() <= 1e-9)
            .map(|(_, placed)| *placed)
            .unwrap_or(x)
    };
    let snap_idx = |a: usize, x: f64| nearest(&lines[a], snap(a, x));

    let mut snap_report = Vec::new();
    for (idx, p) in scene.primitives.iter().enumerate() {
        let (lo, hi) = p.shape.bbox();
        let mut worst = (0.0f64, 0.0f64);
        for a in 0..3 {
            for x in [lo[a], hi[a]] {
                let l = &lines[a];
                let i = nearest(l, x);
                let err = (l[i] - x).abs();
                if err > worst.0 {
                    let c = l.partition_point(|&v| v <= x).clamp(1, l.len() - 1);
                    worst = (err, l[c] - l[c - 1]);
                }
            }
        }
        if worst.0 > 1e-12 {
            snap_report.push(SnapRecord {
                primitive: idx,
                error: worst.0,
                local_cell: worst.1,
            });
        }
    }

    let mut grid = YeeGrid {
        lines: lines.clone(),
        boundaries: scene.boundaries,
        pml_cells,
        materials: vec![
            EdgeMaterial {
                eps_r: 1.0,
                sigma: 0.0,
                pec: false,
            },
            EdgeMaterial {
                eps_r: 1.0,
                sigma: 0.0,
                pec: true,
            },
        ],
        edge_material: Default::default(),
        ports: Vec::new(),
        snap_report,
        structure_bbox: scene.structure_bbox(),
        f0: scene.f0,
        mode: policy.mode,
    };
    assign_materials(scene, &mut grid, &snap_idx)?;
    Ok(grid)
}

fn pad(lines: &mut Vec<f64>, lo: Boundary, hi: Boundary, cells: usize) {
    if lo == Boundary::Open && lines.len() >= 2 {
        let d = lines[1] - lines[0];
        let first = lines[0];
        let pre: Vec<f64> = (1..=cells).rev().map(|c| first - c as f64 * d).collect();
        lines.splice(0..0, pre);
    }
    if hi == Boundary::Open && lines.len() >= 2 {
        let n = lines.len();
        let d = lines[n - 1] - lines[n - 2];
        let last = lines[n - 1];
        lines.extend((1..=cells).map(|c| last + c as f64 * d));
    }
}

fn assign_materials(
    scene: &Scene,
    grid: &mut YeeGrid,
    snap_idx: &dyn Fn(usize, f64) -> usize,
) -> Result<(), MeshError> {
    let [nx, ny, nz] = grid.dims();
    let (cx, cy, cz) = (nx - 1, ny - 1, nz - 1);
    let lines = grid.lines.clone();
    let center = |a: usize, i: usize| 0.5 * (lines[a][i] + lines[a][i + 1]);
    let size = |a: usize, i: usize| lines[a][i + 1] - lines[a][i];

    // Highest-priority solid primitive at each cell center.
    let solids: Vec<(usize, &crate::scene::Primitive)> = scene
        .primitives
        .iter()
        .enumerate()
        .filter(|(_, p)| !matches!(p.shape, Shape::Plate { .. }))
        .collect();
    const AIR: u32 = u32::MAX;
    let mut cell_prim = vec![AIR; cx * cy * cz];
    for k in 0..cz {
        for j in 0..cy {
            for i in 0..cx {
                let p = [center(0, i), center(1, j), center(2, k)];
                let mut best: Option<(i32, usize)> = None;
                for &(idx, prim) in &solids {
                    if prim.shape.contains(p) && best.is_none_or(|(pr, _)| prim.priority > pr) {
                        best = Some((prim.priority, idx));
                    }
                }
                if let Some((_, idx)) = best {
                    cell_prim[i + cx * (j + cy * k)] = idx as u32;
                }
            }
        }
    }
    let cell_props = |c: u32| -> (f64, f64, bool) {
        if c == AIR {
            return (1.0, 0.0, false);
        }
        let m = &scene.materials[scene.primitives[c as usize].material];
        if m.is_pec() {
            (1.0, 0.0, true)
        } else {
            (
                m.eps_r,
                conductivity_from_tan_delta(m.eps_r, m.tan_delta, scene.f0),
                false,
            )
        }
    };

    let mut table: BTreeMap<(u64, u64), u16> = BTreeMap::new();
    table.insert((1.0f64.to_bits(), 0.0f64.to_bits()), VACUUM);
    let mut materials = grid.materials.clone();
    let mut lookup = |eps: f64, sigma: f64| -> u16 {
        *table.entry((eps.to_bits(), sigma.to_bits())).or_insert_with(|| {
            materials.push(EdgeMaterial { eps_r: eps, sigma, pec: false });
            (materials.len() - 1) as u16
        })
    };

    let n = nx * ny * nz;
    let mut edge = [vec![VACUUM; n], vec![VACUUM; n], vec![VACUUM; n]];
    let dims = [nx, ny, nz];
    for comp in 0..3 {
        let (a1, a2) = ((comp + 1) % 3, (comp + 2) % 3);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let ijk = [i, j, k];
                    if ijk[comp] + 1 >= dims[comp] {
                        continue;
                    }
                    let mut w_sum = 0.0;
                    let (mut eps, mut sig) = (0.0, 0.0);
                    let mut pec = false;
                    for d1 in 0..2 {
                        for d2 in 0..2 {
                            let (Some(c1), Some(c2)) = (
                                (ijk[a1] + d1).checked_sub(1).filter(|&c| c + 1 < dims[a1]),
                                (ijk[a2] + d2).checked_sub(1).filter(|&c| c + 1 < dims[a2]),
                            ) else {
                                continue;
                            };
                            let mut cell = ijk;
                            cell[a1] = c1;
                            cell[a2] = c2;
                            let cid = cell[0] + cx * (cell[1] + cy * cell[2]);
                            let (e, s, p) = cell_props(cell_prim[cid]);
                            let w = size(a1, c1) * size(a2, c2);
                            pec |= p;
                            eps += w * e;
                            sig += w * s;
                            w_sum += w;
                        }
                    }
                    let id = i + nx * (j + ny * k);
                    edge[comp][id] = if pec {
                        PEC
                    } else if w_sum > 0.0 {
                        lookup(eps / w_sum, sig / w_sum)
                    } else {
                        VACUUM
                    };
                }
            }
        }
    }

    // Metal plates on their snapped z-plane.
    for p in &scene.primitives {
        let Shape::Plate { x, y, z } = p.shape else { continue };
        if !scene.materials[p.material].is_pec() {
            continue;
        }
        let (i0, mut i1) = (snap_idx(0, x[0]), snap_idx(0, x[1]));
        let (j0, mut j1) = (snap_idx(1, y[0]), snap_idx(1, y[1]));
        if i1 == i0 {
            i1 = (i0 + 1).min(nx - 1);
        }
        if j1 == j0 {
            j1 = (j0 + 1).min(ny - 1);
        }
        let k = snap_idx(2, z);
        for j in j0..=j1 {
            for i in i0..i1 {
                edge[0][i + nx * (j + ny * k)] = PEC;
            }
        }
        for j in j0..j1 {
            for i in i0..=i1 {
                edge[1][i + nx * (j + ny * k)] = PEC;
            }
        }
    }

    // Thin PEC cylinders: vertical edge columns at nodes inside the circle,
    // or the nearest node when none is.
    for p in &scene.primitives {
        let Shape::Cylinder { center, radius, z0, z1 } = p.shape else { continue };
        if !scene.materials[p.material].is_pec() {
            continue;
        }
        let (k0, k1) = (snap_idx(2, z0), snap_idx(2, z1));
        let mut nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let dx = lines[0][i] - center[0];
                let dy = lines[1][j] - center[1];
                if dx * dx + dy * dy <= radius * radius {
                    nodes.push((i, j));
                }
            }
        }
        if nodes.is_empty() {
            nodes.push((snap_idx(0, center[0]), snap_idx(1, center[1])));
        }
        for (i, j) in nodes {
            for k in k0..k1 {
                edge[2][i + nx * (j + ny * k)] = PEC;
            }
        }
    }

    let mut ports = Vec::new();
    for port in &scene.ports {
        let i = snap_idx(0, port.position[0]);
        let j = snap_idx(1, port.position[1]);
        let (k0, k1) = (snap_idx(2, port.z[0]), snap_idx(2, port.z[1]));
        if k1 <= k0 {
            return Err(MeshError::DegeneratePort(port.index));
        }
        let wire_edges: Vec<usize> = (k0 + 1..k1).collect();
        for &k in &wire_edges {
            edge[2][i + nx * (j + ny * k)] = PEC;
        }
        ports.push(GridPort {
            index: port.index,
            node: [i, j],
            gap_edges: vec![k0],
            wire_edges,
            polarization: port.polarization,
            impedance: port.impedance,
        });
    }

    grid.materials = materials;
    grid.edge_material = edge;
    grid.ports = ports;
    Ok(())
}

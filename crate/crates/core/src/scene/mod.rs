//! Solver-independent geometry: materials, primitives, ports and the
//! builders for the single element and the 2×2 array.

mod config;
mod dump;
mod element;

pub use config::{ConfigError, SceneConfig, ScenarioName};
pub use dump::canonical_dump;
pub use element::{
    build_array_2x2, build_single_element, frame_layout, radiator_plates, ElementParams,
    FrameLayout,
};

use crate::constants::wavelength;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MaterialKind {
    Dielectric,
    PerfectConductor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub kind: MaterialKind,
    pub eps_r: f64,
    pub tan_delta: f64,
}

impl Material {
    pub fn dielectric(name: &str, eps_r: f64, tan_delta: f64) -> Result<Self, SceneError> {
        if !(eps_r >= 1.0) || !(0.0..1.0).contains(&tan_delta) {
            return Err(SceneError::InvalidMaterial {
                name: name.to_string(),
                eps_r,
                tan_delta,
            });
        }
        Ok(Self {
            name: name.to_string(),
            kind: MaterialKind::Dielectric,
            eps_r,
            tan_delta,
        })
    }

    pub fn pec() -> Self {
        Self {
            name: "pec".to_string(),
            kind: MaterialKind::PerfectConductor,
            eps_r: 1.0,
            tan_delta: 0.0,
        }
    }

    pub fn is_pec(&self) -> bool {
        self.kind == MaterialKind::PerfectConductor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Cylinder along z.
    Cylinder {
        center: [f64; 2],
        radius: f64,
        z0: f64,
        z1: f64,
    },
    /// Zero-thickness rectangle lying on a z-plane.
    Plate {
        x: [f64; 2],
        y: [f64; 2],
        z: f64,
    },
}

impl Shape {
    /// Lateral/vertical extent as `(min, max)` corners.
    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        match *self {
            Shape::Box { min, max } => (min, max),
            Shape::Cylinder {
                center,
                radius,
                z0,
                z1,
            } => (
                [center[0] - radius, center[1] - radius, z0],
                [center[0] + radius, center[1] + radius, z1],
            ),
            Shape::Plate { x, y, z } => ([x[0], y[0], z], [x[1], y[1], z]),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Shape {
        match *self {
            Shape::Box { min, max } => Shape::Box {
                min: [min[0] + dx, min[1] + dy, min[2]],
                max: [max[0] + dx, max[1] + dy, max[2]],
            },
            Shape::Cylinder {
                center,
                radius,
                z0,
                z1,
            } => Shape::Cylinder {
                center: [center[0] + dx, center[1] + dy],
                radius,
                z0,
                z1,
            },
            Shape::Plate { x, y, z } => Shape::Plate {
                x: [x[0] + dx, x[1] + dx],
                y: [y[0] + dy, y[1] + dy],
                z,
            },
        }
    }

    /// Reflection across the x = y diagonal.
    pub fn swapped_xy(&self) -> Shape {
        match *self {
            Shape::Box { min, max } => Shape::Box {
                min: [min[1], min[0], min[2]],
                max: [max[1], max[0], max[2]],
            },
            Shape::Cylinder {
                center,
                radius,
                z0,
                z1,
            } => Shape::Cylinder {
                center: [center[1], center[0]],
                radius,
                z0,
                z1,
            },
            Shape::Plate { x, y, z } => Shape::Plate { x: y, y: x, z },
        }
    }

    /// Whether a point lies inside a solid shape. Plates have no volume.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            Shape::Box { min, max } => (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a]),
            Shape::Cylinder {
                center,
                radius,
                z0,
                z1,
            } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                p[2] >= z0 && p[2] <= z1 && dx * dx + dy * dy <= radius * radius
            }
            Shape::Plate { .. } => false,
        }
    }
}

/// What a primitive is for; lets frame removal and dumps stay readable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimitiveTag {
    Substrate,
    Ground,
    Radiator,
    FramePlate,
    FrameVia,
    Other,
}

impl PrimitiveTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrimitiveTag::Substrate => "substrate",
            PrimitiveTag::Ground => "ground",
            PrimitiveTag::Radiator => "radiator",
            PrimitiveTag::FramePlate => "frame_plate",
            PrimitiveTag::FrameVia => "frame_via",
            PrimitiveTag::Other => "other",
        }
    }

    pub fn is_frame(&self) -> bool {
        matches!(self, PrimitiveTag::FramePlate | PrimitiveTag::FrameVia)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    /// Index into [`Scene::materials`].
    pub material: usize,
    /// Higher wins where primitives overlap.
    pub priority: i32,
    pub tag: PrimitiveTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    X,
    Y,
}

/// A coaxial feed reduced to a vertical wire with a lumped source gap at
/// the ground end.
#[derive(Debug, Clone, PartialEq)]
pub struct PortDef {
    /// 1-based port number.
    pub index: usize,
    pub position: [f64; 2],
    /// Vertical extent of the feed, ground to patch layer.
    pub z: [f64; 2],
    pub polarization: Polarization,
    pub impedance: f64,
}

/// How the simulation domain is terminated on one face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Pec,
    /// Open space, realized as a CPML padding.
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub materials: Vec<Material>,
    pub primitives: Vec<Primitive>,
    pub ports: Vec<PortDef>,
    /// Simulation bounding box, excluding absorbing padding.
    pub bounds: ([f64; 3], [f64; 3]),
    /// Faces in the order x-, x+, y-, y+, z-, z+.
    pub boundaries: [Boundary; 6],
    /// Lateral substrate footprint `([x0, y0], [x1, y1])`.
    pub footprint: ([f64; 2], [f64; 2]),
    /// Design frequency used for margin checks and default meshing.
    pub f0: f64,
}

/// Faces in `Scene::boundaries` order.
pub const FACE_NAMES: [&str; 6] = ["x-", "x+", "y-", "y+", "z-", "z+"];

/// Boundary layout for antennas over an infinite ground plane.
pub const ANTENNA_BOUNDARIES: [Boundary; 6] = [
    Boundary::Open,
    Boundary::Open,
    Boundary::Open,
    Boundary::Open,
    Boundary::Pec,
    Boundary::Open,
];

impl Scene {
    pub fn material(&self, p: &Primitive) -> &Material {
        &self.materials[p.material]
    }

    pub fn via_count(&self) -> usize {
        self.primitives
            .iter()
            .filter(|p| matches!(p.shape, Shape::Cylinder { .. }))
            .count()
    }

    pub fn port(&self, index: usize) -> Option<&PortDef> {
        self.ports.iter().find(|p| p.index == index)
    }

    /// Bounding box of every primitive except the infinite-ground stand-in.
    pub fn structure_bbox(&self) -> Option<([f64; 3], [f64; 3])> {
        let mut acc: Option<([f64; 3], [f64; 3])> = None;
        for p in self.primitives.iter().filter(|p| p.tag != PrimitiveTag::Ground) {
            let (lo, hi) = p.shape.bbox();
            acc = Some(match acc {
                None => (lo, hi),
                Some((a, b)) => (
                    [a[0].min(lo[0]), a[1].min(lo[1]), a[2].min(lo[2])],
                    [b[0].max(hi[0]), b[1].max(hi[1]), b[2].max(hi[2])],
                ),
            });
        }
        acc
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("invalid element parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("frame overflow: `{dimension}` = {value_mm:.4} mm does not fit ({reason})")]
    FrameOverflow {
        dimension: &'static str,
        value_mm: f64,
        reason: String,
    },
    #[error("invalid material `{name}`: eps_r = {eps_r}, tan_delta = {tan_delta}")]
    InvalidMaterial {
        name: String,
        eps_r: f64,
        tan_delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    NonPositiveExtent,
    OutsideBounds,
    AirMargin,
    PortOutsideFootprint,
    PortPolarization,
    MetalOverlap,
    UnknownMaterial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub rule: Rule,
    pub primitive: Option<usize>,
    pub port: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.primitive, self.port) {
            (Some(p), _) => write!(f, "primitive {p}: {:?}: {}", self.rule, self.message),
            (None, Some(p)) => write!(f, "port {p}: {:?}: {}", self.rule, self.message),
            _ => write!(f, "{:?}: {}", self.rule, self.message),
        }
    }
}

const GEOM_TOL: f64 = 1e-12;

/// Check every scene invariant; an empty list means the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let (blo, bhi) = scene.bounds;
    let margin = wavelength(scene.f0) / 4.0;

    for (idx, p) in scene.primitives.iter().enumerate() {
        let diag = |rule, message: String| Diagnostic {
            rule,
            primitive: Some(idx),
            port: None,
            message,
        };
        if p.material >= scene.materials.len() {
            out.push(diag(Rule::UnknownMaterial, format!("material index {}", p.material)));
            continue;
        }
        let extents_ok = match p.shape {
            Shape::Box { min, max } => (0..3).all(|a| max[a] - min[a] > 0.0),
            Shape::Cylinder { radius, z0, z1, .. } => radius > 0.0 && z1 > z0,
            Shape::Plate { x, y, .. } => x[1] > x[0] && y[1] > y[0],
        };
        if !extents_ok {
            out.push(diag(Rule::NonPositiveExtent, format!("{:?}", p.shape)));
        }
        let (lo, hi) = p.shape.bbox();
        if (0..3).any(|a| lo[a] < blo[a] - GEOM_TOL || hi[a] > bhi[a] + GEOM_TOL) {
            out.push(diag(Rule::OutsideBounds, "extends beyond simulation bounds".into()));
            continue;
        }
        if p.tag == PrimitiveTag::Ground {
            continue;
        }
        for face in 0..6 {
            if scene.boundaries[face] != Boundary::Open {
                continue;
            }
            let axis = face / 2;
            let gap = if face % 2 == 0 {
                lo[axis] - blo[axis]
            } else {
                bhi[axis] - hi[axis]
            };
            if gap < margin - 1e-9 {
                out.push(diag(
                    Rule::AirMargin,
                    format!(
                        "air margin {:.4} mm on face {} is below lambda0/4 = {:.4} mm",
                        gap * 1e3,
                        FACE_NAMES[face],
                        margin * 1e3
                    ),
                ));
            }
        }
    }

    // Distinct metal plates on the same layer must not overlap.
    let plates: Vec<(usize, [f64; 2], [f64; 2], f64)> = scene
        .primitives
        .iter()
        .enumerate()
        .filter(|(_, p)| p.tag != PrimitiveTag::Ground)
        .filter_map(|(i, p)| match p.shape {
            Shape::Plate { x, y, z } if scene.materials.get(p.material).is_some_and(|m| m.is_pec()) => {
                Some((i, x, y, z))
            }
            _ => None,
        })
        .collect();
    for (a, pa) in plates.iter().enumerate() {
        for pb in &plates[a + 1..] {
            if (pa.3 - pb.3).abs() > GEOM_TOL {
                continue;
            }
            let ox = pa.1[1].min(pb.1[1]) - pa.1[0].max(pb.1[0]);
            let oy = pa.2[1].min(pb.2[1]) - pa.2[0].max(pb.2[0]);
            if ox > GEOM_TOL && oy > GEOM_TOL {
                out.push(Diagnostic {
                    rule: Rule::MetalOverlap,
                    primitive: Some(pb.0),
                    port: None,
                    message: format!("overlaps plate primitive {}", pa.0),
                });
            }
        }
    }

    let (fl, fh) = scene.footprint;
    for port in &scene.ports {
        let [x, y] = port.position;
        if x < fl[0] || x > fh[0] || y < fl[1] || y > fh[1] {
            out.push(Diagnostic {
                rule: Rule::PortOutsideFootprint,
                primitive: None,
                port: Some(port.index),
                message: format!("feed at ({:.4}, {:.4}) mm lies outside the substrate", x * 1e3, y * 1e3),
            });
        }
        let expected = if port.index % 2 == 1 {
            Polarization::X
        } else {
            Polarization::Y
        };
        if port.polarization != expected {
            out.push(Diagnostic {
                rule: Rule::PortPolarization,
                primitive: None,
                port: Some(port.index),
                message: format!("odd ports must be x-polarized, even ports y-polarized"),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_single_element_is_valid() {
        let p = ElementParams::default();
        for frame in [false, true] {
            let s = build_single_element(&p, frame).unwrap();
            assert_eq!(validate_scene(&s), vec![]);
        }
        let s = build_array_2x2(&p, true).unwrap();
        assert_eq!(validate_scene(&s), vec![]);
    }

    #[test]
    fn port_outside_footprint_is_named() {
        let mut s = build_single_element(&ElementParams::default(), true).unwrap();
        s.ports[1].position = [0.0, 5e-3];
        let d = validate_scene(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, Rule::PortOutsideFootprint);
        assert_eq!(d[0].port, Some(2));
    }

    #[test]
    fn widened_frame_cell_overlaps() {
        let p = ElementParams::default();
        let mut s = build_single_element(&p, true).unwrap();
        let idx = s
            .primitives
            .iter()
            .position(|q| q.tag == PrimitiveTag::FramePlate)
            .unwrap();
        // Grow the radial depth of one cell to 2 * frame_margin, inward.
        if let Shape::Plate { x, y, z } = s.primitives[idx].shape {
            let depth = 2.0 * p.frame_margin;
            let (x, y) = if (y[1] - y[0]) < (x[1] - x[0]) {
                if y[0] < 0.0 {
                    (x, [y[0], y[0] + depth])
                } else {
                    (x, [y[1] - depth, y[1]])
                }
            } else if x[0] < 0.0 {
                ([x[0], x[0] + depth], y)
            } else {
                ([x[1] - depth, x[1]], y)
            };
            s.primitives[idx].shape = Shape::Plate { x, y, z };
        }
        let d = validate_scene(&s);
        assert!(!d.is_empty());
        assert!(d.iter().all(|d| d.rule == Rule::MetalOverlap));
    }

    #[test]
    fn dielectric_material_invariants() {
        assert!(Material::dielectric("a", 0.5, 0.0).is_err());
        assert!(Material::dielectric("a", 3.5, 1.0).is_err());
        assert!(Material::dielectric("a", 3.5, 0.0041).is_ok());
    }

    #[test]
    fn shrinking_air_margin_is_flagged() {
        let mut s = build_single_element(&ElementParams::default(), false).unwrap();
        s.bounds.1[2] = s.bounds.1[2] - 1e-3;
        let d = validate_scene(&s);
        assert!(d.iter().any(|d| d.rule == Rule::AirMargin));
    }
}

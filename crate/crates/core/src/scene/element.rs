//! Element parameters and the builders for the single element and 2×2 array.

use super::{
    Boundary, Material, PortDef, Polarization, Primitive, PrimitiveTag, Scene, SceneError, Shape,
    ANTENNA_BOUNDARIES,
};
use crate::constants::wavelength;
use serde::{Deserialize, Serialize};

/// Dimensions of the dual-polarized element, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementParams {
    /// Element side length, frame included.
    pub w_s: f64,
    /// Substrate height.
    pub h: f64,
    /// Nominal length of the parasitic arms.
    pub l_p: f64,
    /// Width of the parasitic arms.
    pub w_p: f64,
    /// Slot between the driven patch and each arm.
    pub s: f64,
    /// Minimum metal-to-metal gap (arm corners, frame cells).
    pub g: f64,
    /// Side of the driven square patch.
    pub w_pa: f64,
    /// Feed offset from the element center.
    pub l_f: f64,
    /// Radial depth of a frame cell.
    pub w_ebg: f64,
    /// Length of a frame cell along the element side.
    pub l_ebg: f64,
    /// Via diameter.
    pub v_ebg: f64,
    /// Depth of the frame ring on each side.
    pub frame_margin: f64,
    pub eps_r: f64,
    pub tan_delta: f64,
    /// Design center frequency (Hz).
    pub f0: f64,
}

impl Default for ElementParams {
    fn default() -> Self {
        Self {
            w_s: 7.089e-3,
            h: 2.5e-3,
            l_p: 3.115e-3,
            w_p: 0.354e-3,
            s: 0.177e-3,
            g: 0.027e-3,
            w_pa: 2.478e-3,
            l_f: 0.354e-3,
            w_ebg: 0.8e-3,
            l_ebg: 2.65e-3,
            v_ebg: 0.2e-3,
            frame_margin: 1.0e-3,
            eps_r: 3.5,
            tan_delta: 0.0041,
            f0: 28e9,
        }
    }
}

/// Names of the length fields, in declaration order.
pub const LENGTH_FIELDS: [&str; 12] = [
    "w_s",
    "h",
    "l_p",
    "w_p",
    "s",
    "g",
    "w_pa",
    "l_f",
    "w_ebg",
    "l_ebg",
    "v_ebg",
    "frame_margin",
];

impl ElementParams {
    pub fn length_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "w_s" => &mut self.w_s,
            "h" => &mut self.h,
            "l_p" => &mut self.l_p,
            "w_p" => &mut self.w_p,
            "s" => &mut self.s,
            "g" => &mut self.g,
            "w_pa" => &mut self.w_pa,
            "l_f" => &mut self.l_f,
            "w_ebg" => &mut self.w_ebg,
            "l_ebg" => &mut self.l_ebg,
            "v_ebg" => &mut self.v_ebg,
            "frame_margin" => &mut self.frame_margin,
            _ => return None,
        })
    }

    fn invalid(name: &'static str, reason: impl Into<String>) -> SceneError {
        SceneError::InvalidParams {
            name,
            reason: reason.into(),
        }
    }

    /// Check the dimensional ordering and the frame fit.
    pub fn validate(&self) -> Result<(), SceneError> {
        let lengths = [
            ("w_s", self.w_s),
            ("h", self.h),
            ("l_p", self.l_p),
            ("w_p", self.w_p),
            ("s", self.s),
            ("g", self.g),
            ("w_pa", self.w_pa),
            ("l_f", self.l_f),
            ("w_ebg", self.w_ebg),
            ("l_ebg", self.l_ebg),
            ("v_ebg", self.v_ebg),
            ("frame_margin", self.frame_margin),
        ];
        for (name, v) in lengths {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Self::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.f0 > 0.0) {
            return Err(Self::invalid("f0", "must be positive"));
        }
        Material::dielectric("substrate", self.eps_r, self.tan_delta)?;

        // Frame fit comes first so an oversized frame is reported as such.
        if self.w_ebg >= self.frame_margin {
            return Err(SceneError::FrameOverflow {
                dimension: "w_ebg",
                value_mm: self.w_ebg * 1e3,
                reason: format!(
                    "radial depth must be below frame_margin = {:.4} mm",
                    self.frame_margin * 1e3
                ),
            });
        }
        let side = self.w_s - 2.0 * self.frame_margin;
        if self.l_ebg > side {
            return Err(SceneError::FrameOverflow {
                dimension: "l_ebg",
                value_mm: self.l_ebg * 1e3,
                reason: format!("no cell fits the {:.4} mm frame side", side * 1e3),
            });
        }

        let chain = [
            ("g", self.g),
            ("s", self.s),
            ("w_p", self.w_p),
            ("w_pa", self.w_pa),
            ("l_p", self.l_p),
            ("w_s", self.w_s),
        ];
        for pair in chain.windows(2) {
            if pair[0].1 >= pair[1].1 {
                return Err(Self::invalid(
                    pair[1].0,
                    format!("ordering g < s < w_p < w_pa < l_p < w_s violated at {} >= {}", pair[0].0, pair[1].0),
                ));
            }
        }
        if !(self.v_ebg < self.w_ebg && self.w_ebg < self.l_ebg) {
            return Err(Self::invalid("w_ebg", "ordering v_ebg < w_ebg < l_ebg violated"));
        }
        let target = 0.66 * wavelength(self.f0);
        if ((self.w_s - target) / target).abs() > 0.01 {
            return Err(Self::invalid(
                "w_s",
                format!("must be 0.66 lambda0 = {:.4} mm within 1%", target * 1e3),
            ));
        }
        if self.l_f >= self.w_pa / 2.0 {
            return Err(Self::invalid("l_f", "feed must land on the driven patch"));
        }
        let (_, outer) = radiator_extent(self);
        if outer > side / 2.0 {
            return Err(Self::invalid(
                "w_p",
                format!("radiator half-width {:.4} mm exceeds the inner region", outer * 1e3),
            ));
        }
        Ok(())
    }
}

/// Half-length of each arm after corner clipping, and the radiator's outer
/// half-width.
fn radiator_extent(p: &ElementParams) -> (f64, f64) {
    let inner = p.w_pa / 2.0 + p.s;
    let half_len = (p.l_p / 2.0).min(inner - p.g);
    (half_len, inner + p.w_p)
}

/// Radiator metallization centered at the origin, as `(x, y)` rectangles.
///
/// Legend (all on the top layer, z = h):
///
/// ```text
///          +------------------+          arm: w_p wide, nominally l_p long
///          +------------------+          slot s between arm and patch
///   +--+                            +--+
///   |  |   +----------------+       |  |
///   |  |   |                |       |  |
///   |  |   |  driven patch  |       |  |  side w_pa, both feeds land here
///   |  |   |   x-feed o     |       |  |  x-feed at (-l_f, 0)
///   |  |   |        o y-feed|       |  |  y-feed at (0, -l_f)
///   |  |   +----------------+       |  |
///   +--+                            +--+
///          +------------------+
///          +------------------+
/// ```
///
/// Arms are clipped symmetrically so that neighbouring arms keep a gap of
/// at least `g` at the corners.
pub fn radiator_plates(p: &ElementParams) -> Vec<([f64; 2], [f64; 2])> {
    let half = p.w_pa / 2.0;
    let inner = half + p.s;
    let outer = inner + p.w_p;
    let (arm, _) = radiator_extent(p);
    vec![
        ([-half, half], [-half, half]),
        ([-arm, arm], [inner, outer]),
        ([-arm, arm], [-outer, -inner]),
        ([inner, outer], [-arm, arm]),
        ([-outer, -inner], [-arm, arm]),
    ]
}

/// Placement of the AMC cells around one element.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    pub cells_per_side: usize,
    /// Uniform spacing between cells along a side (half of it at each end).
    pub gap: f64,
    /// Distance from the substrate edge to the outer edge of each cell.
    pub clearance: f64,
    /// Plate rectangles relative to the element center.
    pub cells: Vec<([f64; 2], [f64; 2])>,
}

/// Tile each side with the largest number of cells that fits between the
/// corner squares, centered, at uniform spacing no smaller than `g`.
pub fn frame_layout(p: &ElementParams) -> Result<FrameLayout, SceneError> {
    let side = p.w_s - 2.0 * p.frame_margin;
    let n = ((side + p.g) / (p.l_ebg + p.g)).floor() as usize;
    if n == 0 || p.w_ebg >= p.frame_margin {
        return Err(SceneError::FrameOverflow {
            dimension: if n == 0 { "l_ebg" } else { "w_ebg" },
            value_mm: if n == 0 { p.l_ebg } else { p.w_ebg } * 1e3,
            reason: "frame does not fit in the margin".into(),
        });
    }
    let gap = (side - n as f64 * p.l_ebg) / n as f64;
    let clearance = (p.frame_margin - p.w_ebg) / 2.0;
    let outer = p.w_s / 2.0 - clearance;
    let inner = outer - p.w_ebg;
    let mut cells = Vec::with_capacity(4 * n);
    for i in 0..n {
        let a = -side / 2.0 + gap / 2.0 + i as f64 * (p.l_ebg + gap);
        let along = [a, a + p.l_ebg];
        cells.push((along, [-outer, -inner]));
        cells.push((along, [inner, outer]));
        cells.push(([-outer, -inner], along));
        cells.push(([inner, outer], along));
    }
    Ok(FrameLayout {
        cells_per_side: n,
        gap,
        clearance,
        cells,
    })
}

fn element_primitives(p: &ElementParams, with_frame: bool) -> Result<Vec<Primitive>, SceneError> {
    let mut prims = Vec::new();
    for (x, y) in radiator_plates(p) {
        prims.push(Primitive {
            shape: Shape::Plate { x, y, z: p.h },
            material: PEC,
            priority: 10,
            tag: PrimitiveTag::Radiator,
        });
    }
    if with_frame {
        let layout = frame_layout(p)?;
        for (x, y) in layout.cells {
            prims.push(Primitive {
                shape: Shape::Plate { x, y, z: p.h },
                material: PEC,
                priority: 10,
                tag: PrimitiveTag::FramePlate,
            });
            prims.push(Primitive {
                shape: Shape::Cylinder {
                    center: [(x[0] + x[1]) / 2.0, (y[0] + y[1]) / 2.0],
                    radius: p.v_ebg / 2.0,
                    z0: 0.0,
                    z1: p.h,
                },
                material: PEC,
                priority: 20,
                tag: PrimitiveTag::FrameVia,
            });
        }
    }
    Ok(prims)
}

const SUBSTRATE: usize = 0;
const PEC: usize = 1;

fn element_ports(p: &ElementParams, center: [f64; 2], first_index: usize) -> [PortDef; 2] {
    [
        PortDef {
            index: first_index,
            position: [center[0] - p.l_f, center[1]],
            z: [0.0, p.h],
            polarization: Polarization::X,
            impedance: 50.0,
        },
        PortDef {
            index: first_index + 1,
            position: [center[0], center[1] - p.l_f],
            z: [0.0, p.h],
            polarization: Polarization::Y,
            impedance: 50.0,
        },
    ]
}

fn assemble(
    p: &ElementParams,
    half_width: f64,
    mut primitives: Vec<Primitive>,
    ports: Vec<PortDef>,
) -> Result<Scene, SceneError> {
    let materials = vec![
        Material::dielectric("taconic_rf35", p.eps_r, p.tan_delta)?,
        Material::pec(),
    ];
    let hw = half_width;
    primitives.insert(
        0,
        Primitive {
            shape: Shape::Box {
                min: [-hw, -hw, 0.0],
                max: [hw, hw, p.h],
            },
            material: SUBSTRATE,
            priority: 0,
            tag: PrimitiveTag::Substrate,
        },
    );
    primitives.insert(
        1,
        Primitive {
            shape: Shape::Plate {
                x: [-hw, hw],
                y: [-hw, hw],
                z: 0.0,
            },
            material: PEC,
            priority: 10,
            tag: PrimitiveTag::Ground,
        },
    );
    let margin = wavelength(p.f0) / 4.0;
    let ext = hw + margin;
    Ok(Scene {
        materials,
        primitives,
        ports,
        bounds: ([-ext, -ext, 0.0], [ext, ext, p.h + margin]),
        boundaries: ANTENNA_BOUNDARIES,
        footprint: ([-hw, -hw], [hw, hw]),
        f0: p.f0,
    })
}

/// Single element centered at the origin with its two feeds.
pub fn build_single_element(p: &ElementParams, with_frame: bool) -> Result<Scene, SceneError> {
    p.validate()?;
    let prims = element_primitives(p, with_frame)?;
    let ports = element_ports(p, [0.0, 0.0], 1).to_vec();
    assemble(p, p.w_s / 2.0, prims, ports)
}

/// Element center for array position `(row, col)`, array centered at the
/// origin with pitch `w_s`.
pub fn array_element_center(p: &ElementParams, row: usize, col: usize) -> [f64; 2] {
    [
        (col as f64 - 0.5) * p.w_s,
        (row as f64 - 0.5) * p.w_s,
    ]
}

/// 2×2 tiling at pitch `w_s`; element `(row, col)` owns ports `2k-1, 2k`
/// with `k = 2 row + col + 1`.
pub fn build_array_2x2(p: &ElementParams, with_frame: bool) -> Result<Scene, SceneError> {
    p.validate()?;
    let unit = element_primitives(p, with_frame)?;
    let mut prims = Vec::with_capacity(unit.len() * 4);
    let mut ports = Vec::with_capacity(8);
    for row in 0..2 {
        for col in 0..2 {
            let c = array_element_center(p, row, col);
            let k = 2 * row + col + 1;
            prims.extend(unit.iter().map(|q| Primitive {
                shape: q.shape.translated(c[0], c[1]),
                ..q.clone()
            }));
            ports.extend(element_ports(p, c, 2 * k - 1));
        }
    }
    let scene = assemble(p, p.w_s, prims, ports)?;
    debug_assert!(scene.boundaries[4] == Boundary::Pec);
    Ok(scene)
}

//! Reflection phase of the mushroom unit cell: the lumped LC surface model,
//! the ±90° operating band, and a periodic FDTD cross-check.

mod fdtd;

pub use fdtd::{cell_scene, reflection_phase_fdtd, CellKind, FdtdPhaseOptions};

use crate::constants::{EPS0, ETA0, MU0};
use crate::scene::ElementParams;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AmcError {
    #[error("invalid cell parameters: {0}")]
    InvalidParams(String),
    #[error("frequencies must be positive and increasing")]
    BadFrequencies,
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

/// Mushroom cell: square patch of side `w` on a grounded slab, separated
/// from its neighbours by `gap`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmcCellParams {
    pub w: f64,
    pub gap: f64,
    pub h: f64,
    pub eps_r: f64,
    pub via_radius: f64,
}

impl Default for AmcCellParams {
    fn default() -> Self {
        Self::from_element(&ElementParams::default(), 0.2e-3)
    }
}

impl AmcCellParams {
    pub fn from_element(p: &ElementParams, gap: f64) -> Self {
        Self {
            w: p.l_ebg,
            gap,
            h: p.h,
            eps_r: p.eps_r,
            via_radius: p.v_ebg / 2.0,
        }
    }

    pub fn period(&self) -> f64 {
        self.w + self.gap
    }

    pub fn validate(&self) -> Result<(), AmcError> {
        let bad = |m: &str| Err(AmcError::InvalidParams(m.to_string()));
        if !(self.gap > 0.0) {
            return bad("gap must be positive");
        }
        if !(self.w > self.gap) {
            return bad("patch width must exceed the gap");
        }
        if !(self.h > 0.0 && self.eps_r >= 1.0 && self.via_radius >= 0.0 && 2.0 * self.via_radius < self.w) {
            return bad("need h > 0, eps_r >= 1 and a via narrower than the patch");
        }
        Ok(())
    }

    /// Sheet inductance `μ0 h`.
    pub fn inductance(&self) -> f64 {
        MU0 * self.h
    }

    /// Edge capacitance of the gap between coplanar patches.
    pub fn capacitance(&self) -> f64 {
        self.w * EPS0 * (1.0 + self.eps_r) / PI * ((self.w + self.gap) / self.gap).acosh()
    }

    pub fn resonance(&self) -> f64 {
        1.0 / (2.0 * PI * (self.inductance() * self.capacitance()).sqrt())
    }
}

/// `Zs = jωL / (1 − ω²LC)`. Exactly at resonance the result is an infinite
/// reactance carrying the sign of the approach from below.
pub fn surface_impedance(p: &AmcCellParams, f: f64) -> Complex64 {
    let w = 2.0 * PI * f;
    let (l, c) = (p.inductance(), p.capacitance());
    let den = 1.0 - w * w * l * c;
    if den == 0.0 {
        return Complex64::new(0.0, f64::INFINITY);
    }
    Complex64::new(0.0, w * l / den)
}

/// Phase of `Γ = (Zs − η0)/(Zs + η0)` in degrees, in (−180, 180].
pub fn reflection_phase(zs: Complex64) -> f64 {
    if !zs.is_finite() {
        return 0.0;
    }
    let g = (zs - ETA0) / (zs + ETA0);
    let p = g.arg().to_degrees();
    if p <= -180.0 {
        p + 360.0
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseModel {
    Analytic,
    Fdtd,
}

impl PhaseModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseModel::Analytic => "analytic",
            PhaseModel::Fdtd => "fdtd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub freqs: Vec<f64>,
    /// Wrapped to (−180, 180].
    pub phase_deg: Vec<f64>,
    pub model: PhaseModel,
}

pub fn analytic_curve(p: &AmcCellParams, freqs: &[f64]) -> PhaseCurve {
    PhaseCurve {
        freqs: freqs.to_vec(),
        phase_deg: freqs.iter().map(|&f| reflection_phase(surface_impedance(p, f))).collect(),
        model: PhaseModel::Analytic,
    }
}

/// Contiguous `|phase| <= 90°` interval around the first downward 0°
/// crossing of the curve, edges interpolated linearly.
pub fn band_of(curve: &PhaseCurve) -> Option<(f64, f64)> {
    let (f, ph) = (&curve.freqs, &curve.phase_deg);
    if f.len() < 2 {
        return None;
    }
    // A 0° crossing moves from positive to negative phase without jumping
    // across ±180.
    let zero = (0..f.len() - 1).find(|&i| ph[i] >= 0.0 && ph[i + 1] < 0.0 && ph[i] - ph[i + 1] < 180.0)?;
    let lerp = |i: usize, j: usize, level: f64| f[i] + (level - ph[i]) / (ph[j] - ph[i]) * (f[j] - f[i]);
    let mut lo = zero;
    while lo > 0 && ph[lo - 1].abs() <= 90.0 && ph[lo - 1] >= ph[lo] {
        lo -= 1;
    }
    let f_lo = if lo > 0 && ph[lo - 1] > 90.0 { lerp(lo - 1, lo, 90.0) } else { f[lo] };
    let mut hi = zero + 1;
    while hi + 1 < f.len() && ph[hi + 1].abs() <= 90.0 && ph[hi + 1] <= ph[hi] {
        hi += 1;
    }
    let f_hi = if hi + 1 < f.len() && ph[hi + 1] < -90.0 { lerp(hi, hi + 1, -90.0) } else { f[hi] };
    Some((f_lo, f_hi))
}

/// Operating band of the analytic model over `[f_start, f_stop]`.
pub fn amc_band(p: &AmcCellParams, f_start: f64, f_stop: f64) -> Result<Option<(f64, f64)>, AmcError> {
    if !(f_start > 0.0 && f_stop > f_start) {
        return Err(AmcError::BadFrequencies);
    }
    let n = 4000;
    let freqs: Vec<f64> = (0..=n).map(|i| f_start + (f_stop - f_start) * i as f64 / n as f64).collect();
    Ok(band_of(&analytic_curve(p, &freqs)))
}

/// `freq_ghz,phase_deg,model` rows for any number of curves.
pub fn format_phase_csv(curves: &[&PhaseCurve]) -> String {
    let mut out = String::from("freq_ghz,phase_deg,model\n");
    for c in curves {
        for (f, p) in c.freqs.iter().zip(&c.phase_deg) {
            let _ = writeln!(out, "{},{:.6},{}", f * 1e-9, p, c.model.as_str());
        }
    }
    out
}

#[cfg(test)]
mod tests;

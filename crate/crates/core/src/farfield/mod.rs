//! Near-to-far-field transform of Huygens-surface phasors and the pattern
//! figures of merit derived from it.

mod io;
mod metrics;

pub use io::{format_pattern_csv, format_polar_cut, write_pattern_csv, write_polar_cut};
pub use metrics::{
    aperture_efficiency, cut, hpbw, mirror_symmetry_error, pattern_metrics, resample_cut, xpd, PatternMetrics,
};

use crate::constants::{C0, ETA0};
use crate::network::power_waves;
use crate::solver::{HuygensRecord, Recordings};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FarFieldError {
    #[error("{freq} Hz not recorded; available: {available:?}")]
    FrequencyAbsent { freq: f64, available: Vec<f64> },
    #[error("accepted power must be positive, got {0}")]
    NonPositivePower(f64),
    #[error("no -3 dB crossing on the {0} side of the beam peak")]
    OneSidedBeam(&'static str),
    #[error("co-polar field is zero; XPD undefined")]
    UndefinedXpd,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("far fields differ in grid or frequency")]
    GridMismatch,
    #[error("cut at phi = {0} deg needs phi and phi + 180 in the grid")]
    CutAbsent(f64),
}

/// Observation directions in degrees, theta-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Default for AngleGrid {
    /// Full sphere in 1 degree steps.
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl AngleGrid {
    /// `theta` over [0, 180] and `phi` over [0, 360) in `step` degrees.
    pub fn uniform(step: f64) -> Self {
        let nt = (180.0 / step).round() as usize;
        let np = (360.0 / step).round() as usize;
        Self {
            theta: (0..=nt).map(|i| i as f64 * step).collect(),
            phi: (0..np).map(|i| i as f64 * step).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, it: usize, ip: usize) -> usize {
        it * self.phi.len() + ip
    }

    /// Column of `phi_deg` (modulo 360), if sampled.
    pub fn phi_index(&self, phi_deg: f64) -> Option<usize> {
        let p = phi_deg.rem_euclid(360.0);
        self.phi
            .iter()
            .position(|&q| (q.rem_euclid(360.0) - p).abs() < 1e-9 || (q.rem_euclid(360.0) - p).abs() > 360.0 - 1e-9)
    }

    /// Solid-angle weight of every grid point: trapezoid in theta, uniform
    /// periodic sum in phi.
    fn solid_angle_weights(&self) -> Vec<f64> {
        let dphi = 2.0 * PI / self.phi.len() as f64;
        let nt = self.theta.len();
        let mut w = vec![0.0; self.len()];
        for it in 0..nt {
            let lo = if it > 0 { self.theta[it - 1] } else { self.theta[it] };
            let hi = if it + 1 < nt { self.theta[it + 1] } else { self.theta[it] };
            let dtheta = 0.5 * (hi - lo).to_radians();
            let s = self.theta[it].to_radians().sin() * dtheta * dphi;
            for ip in 0..self.phi.len() {
                w[self.index(it, ip)] = s;
            }
        }
        w
    }
}

/// Far-zone field `r E e^{jkr}` on an angle grid at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub freq: f64,
    pub grid: AngleGrid,
    pub e_theta: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
    /// Net Poynting flux out of the Huygens surface (W).
    pub radiated_power: f64,
    /// `(port, a, b)` power waves at `freq`, when the source was a port.
    pub port_waves: Vec<(usize, Complex64, Complex64)>,
    /// Fields below the ground plane are zero by construction.
    pub upper_half_only: bool,
}

impl FarField {
    /// Radiation intensity (W/sr) per grid point.
    pub fn intensity(&self) -> Vec<f64> {
        self.e_theta
            .iter()
            .zip(&self.e_phi)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()) / (2.0 * ETA0))
            .collect()
    }

    /// Pattern-integrated radiated power, `∮ U dΩ`.
    pub fn integrated_power(&self) -> f64 {
        self.intensity()
            .iter()
            .zip(self.grid.solid_angle_weights())
            .map(|(u, w)| u * w)
            .sum()
    }

    /// `½(‖a‖² − ‖b‖²)` over the port waves.
    pub fn accepted_power(&self) -> Option<f64> {
        if self.port_waves.is_empty() {
            return None;
        }
        Some(0.5 * self.port_waves.iter().map(|(_, a, b)| a.norm_sqr() - b.norm_sqr()).sum::<f64>())
    }

    /// Record the port power waves of the run that produced this field.
    pub fn attach_port_waves(&mut self, rec: &Recordings) {
        self.port_waves = rec
            .ports
            .iter()
            .map(|p| {
                let (a, b) = power_waves(p, rec.dt, self.freq, p.impedance);
                (p.index, a, b)
            })
            .collect();
        self.port_waves.sort_by_key(|w| w.0);
    }

    pub fn directivity_dbi(&self) -> Vec<f64> {
        let p = self.integrated_power();
        self.intensity().iter().map(|u| to_dbi(4.0 * PI * u / p)).collect()
    }
}

fn to_dbi(g: f64) -> f64 {
    10.0 * g.max(1e-30).log10()
}

/// `G = 4πU / P_accepted` in dBi per grid point.
pub fn gain_pattern(ff: &FarField, accepted_power: f64) -> Result<Vec<f64>, FarFieldError> {
    if !(accepted_power > 0.0) {
        return Err(FarFieldError::NonPositivePower(accepted_power));
    }
    Ok(ff.intensity().iter().map(|u| to_dbi(4.0 * PI * u / accepted_power)).collect())
}

/// Equivalent currents of one surface element, already weighted by area.
struct Source {
    pos: [f64; 3],
    j: [Complex64; 3],
    m: [Complex64; 3],
}

fn cross(a: [f64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

/// Transform the recorded surface fields at `freq` to the far zone.
///
/// `J = n×H` and `M = −n×E` are integrated into the radiation vectors. When
/// the record omits the ground face, the currents are mirrored in the PEC
/// plane `z = 0` (`J` tangential and `M` normal flip sign) and only the
/// upper half space is evaluated.
pub fn ntff(record: &HuygensRecord, freq: f64, grid: &AngleGrid) -> Result<FarField, FarFieldError> {
    let fi = record
        .freqs
        .iter()
        .position(|&f| (f - freq).abs() <= 1e-9 * freq.abs())
        .ok_or_else(|| FarFieldError::FrequencyAbsent {
            freq,
            available: record.freqs.clone(),
        })?;
    let k = 2.0 * PI * freq / C0;
    let mut sources = Vec::with_capacity(record.samples.len() * if record.ground_image { 2 } else { 1 });
    let mut flux = 0.0;
    for s in &record.samples {
        let (e, h) = (s.e[fi], s.h[fi]);
        let j = cross(s.normal, h).map(|c| c * s.area);
        let m = cross(s.normal, e).map(|c| -c * s.area);
        let exh = [
            e[1] * h[2].conj() - e[2] * h[1].conj(),
            e[2] * h[0].conj() - e[0] * h[2].conj(),
            e[0] * h[1].conj() - e[1] * h[0].conj(),
        ];
        flux += 0.5 * (0..3).map(|a| exh[a].re * s.normal[a]).sum::<f64>() * s.area;
        sources.push(Source { pos: s.pos, j, m });
        if record.ground_image {
            sources.push(Source {
                pos: [s.pos[0], s.pos[1], -s.pos[2]],
                j: [-j[0], -j[1], j[2]],
                m: [m[0], m[1], -m[2]],
            });
        }
    }
    let np = grid.phi.len();
    let rows: Vec<Vec<(Complex64, Complex64)>> = grid
        .theta
        .par_iter()
        .map(|&th| {
            let th = th.to_radians();
            if record.ground_image && th > PI / 2.0 + 1e-12 {
                return vec![(Complex64::default(), Complex64::default()); np];
            }
            grid.phi
                .iter()
                .map(|&ph| radiate(&sources, k, th, ph.to_radians()))
                .collect()
        })
        .collect();
    let (e_theta, e_phi) = rows.into_iter().flatten().unzip();
    Ok(FarField {
        freq,
        grid: grid.clone(),
        e_theta,
        e_phi,
        radiated_power: flux,
        port_waves: Vec::new(),
        upper_half_only: record.ground_image,
    })
}

fn radiate(sources: &[Source], k: f64, th: f64, ph: f64) -> (Complex64, Complex64) {
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    let r = [st * cp, st * sp, ct];
    let mut n = [Complex64::default(); 3];
    let mut l = [Complex64::default(); 3];
    for s in sources {
        let phase = Complex64::from_polar(1.0, k * (r[0] * s.pos[0] + r[1] * s.pos[1] + r[2] * s.pos[2]));
        for a in 0..3 {
            n[a] += s.j[a] * phase;
            l[a] += s.m[a] * phase;
        }
    }
    let theta_of = |v: [Complex64; 3]| v[0] * (ct * cp) + v[1] * (ct * sp) - v[2] * st;
    let phi_of = |v: [Complex64; 3]| -v[0] * sp + v[1] * cp;
    let (n_t, n_p, l_t, l_p) = (theta_of(n), phi_of(n), theta_of(l), phi_of(l));
    let c = Complex64::new(0.0, k / (4.0 * PI));
    (-c * (l_p + n_t * ETA0), c * (l_t - n_p * ETA0))
}

/// Complex-weighted sum of per-port far fields. Port waves combine with the
/// same weights, so the accepted power of the sum follows from linearity.
pub fn superpose_excitations(ffs: &[FarField], weights: &[Complex64]) -> Result<FarField, FarFieldError> {
    if ffs.len() != weights.len() || ffs.is_empty() {
        return Err(FarFieldError::WeightCount {
            expected: ffs.len(),
            got: weights.len(),
        });
    }
    let first = &ffs[0];
    if ffs
        .iter()
        .any(|f| f.grid != first.grid || f.freq != first.freq || f.upper_half_only != first.upper_half_only)
    {
        return Err(FarFieldError::GridMismatch);
    }
    let mut out = FarField {
        e_theta: vec![Complex64::default(); first.e_theta.len()],
        e_phi: vec![Complex64::default(); first.e_phi.len()],
        port_waves: first
            .port_waves
            .iter()
            .map(|&(p, ..)| (p, Complex64::default(), Complex64::default()))
            .collect(),
        ..first.clone()
    };
    for (f, &w) in ffs.iter().zip(weights) {
        for (o, v) in out.e_theta.iter_mut().zip(&f.e_theta) {
            *o += w * v;
        }
        for (o, v) in out.e_phi.iter_mut().zip(&f.e_phi) {
            *o += w * v;
        }
        if f.port_waves.len() != out.port_waves.len() {
            return Err(FarFieldError::GridMismatch);
        }
        for (o, v) in out.port_waves.iter_mut().zip(&f.port_waves) {
            o.1 += w * v.1;
            o.2 += w * v.2;
        }
    }
    out.radiated_power = out.integrated_power();
    Ok(out)
}

#[cfg(test)]
mod tests;

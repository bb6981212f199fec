use super::{gain_pattern, FarField, FarFieldError};
use crate::constants::wavelength;
use crate::scene::Polarization;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Extract the `phi` plane of a grid quantity as a `[-180, 180]` cut.
pub fn cut<T: Copy>(ff: &FarField, values: &[T], phi: f64) -> Result<(Vec<f64>, Vec<T>), FarFieldError> {
    let g = &ff.grid;
    let (Some(a), Some(b)) = (g.phi_index(phi), g.phi_index(phi + 180.0)) else {
        return Err(FarFieldError::CutAbsent(phi));
    };
    let mut angle = Vec::new();
    let mut out = Vec::new();
    for it in (0..g.theta.len()).rev() {
        if g.theta[it] > 0.0 {
            angle.push(-g.theta[it]);
            out.push(values[g.index(it, b)]);
        }
    }
    for (it, &th) in g.theta.iter().enumerate() {
        angle.push(th);
        out.push(values[g.index(it, a)]);
    }
    Ok((angle, out))
}

/// Linear resampling of a cut onto a `step`-degree grid.
pub fn resample_cut(angle: &[f64], value: &[f64], step: f64) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (angle[0], angle[angle.len() - 1]);
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut out_a = Vec::with_capacity(n + 1);
    let mut out_v = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for i in 0..=n {
        let x = lo + i as f64 * step;
        while seg + 2 < angle.len() && angle[seg + 1] < x {
            seg += 1;
        }
        let (x0, x1) = (angle[seg], angle[(seg + 1).min(angle.len() - 1)]);
        let t = if x1 > x0 { ((x - x0) / (x1 - x0)).clamp(0.0, 1.0) } else { 0.0 };
        out_a.push(x);
        out_v.push(value[seg] + t * (value[(seg + 1).min(angle.len() - 1)] - value[seg]));
    }
    (out_a, out_v)
}

/// Width between the half-power (-3 dB) crossings on either side of the
/// global peak, interpolated linearly in dB.
pub fn hpbw(angle: &[f64], db: &[f64]) -> Result<f64, FarFieldError> {
    let peak = (0..db.len()).fold(0, |m, i| if db[i] > db[m] { i } else { m });
    let level = db[peak] - 10.0 * 2f64.log10();
    let cross = |i: usize, j: usize| angle[i] + (level - db[i]) / (db[j] - db[i]) * (angle[j] - angle[i]);
    let left = (1..=peak).rev().find(|&i| db[i - 1] <= level).map(|i| cross(i, i - 1));
    let right = (peak..db.len() - 1).find(|&i| db[i + 1] <= level).map(|i| cross(i, i + 1));
    match (left, right) {
        (Some(l), Some(r)) => Ok(r - l),
        (None, _) => Err(FarFieldError::OneSidedBeam("negative")),
        (_, None) => Err(FarFieldError::OneSidedBeam("positive")),
    }
}

/// Ludwig-3 co/cross ratio at the co-polar peak of the `phi` cut, capped at
/// 60 dB. The reference polarization is the feed's.
pub fn xpd(ff: &FarField, phi: f64, pol: Polarization) -> Result<f64, FarFieldError> {
    let g = &ff.grid;
    let mut co = Vec::with_capacity(g.len());
    let mut cx = Vec::with_capacity(g.len());
    for it in 0..g.theta.len() {
        for (ip, &p) in g.phi.iter().enumerate() {
            let (s, c) = p.to_radians().sin_cos();
            let n = g.index(it, ip);
            let (et, ep) = (ff.e_theta[n], ff.e_phi[n]);
            let x: Complex64 = et * c - ep * s;
            let y: Complex64 = et * s + ep * c;
            let (a, b) = match pol {
                Polarization::X => (x, y),
                Polarization::Y => (y, x),
            };
            co.push(a.norm());
            cx.push(b.norm());
        }
    }
    let (_, co_cut) = cut(ff, &co, phi)?;
    let (_, cx_cut) = cut(ff, &cx, phi)?;
    let peak = (0..co_cut.len()).fold(0, |m, i| if co_cut[i] > co_cut[m] { i } else { m });
    if co_cut[peak] == 0.0 {
        return Err(FarFieldError::UndefinedXpd);
    }
    Ok((20.0 * (co_cut[peak] / cx_cut[peak]).log10()).min(60.0))
}

/// `η = G λ² / (4π A)`.
pub fn aperture_efficiency(peak_gain_dbi: f64, area: f64, freq: f64) -> f64 {
    let l = wavelength(freq);
    10f64.powf(peak_gain_dbi / 10.0) * l * l / (4.0 * PI * area)
}

/// Largest `|G(θ,φ) − G(θ,−φ)|` in dB over points where either value lies
/// within `floor_db` of the peak.
pub fn mirror_symmetry_error(ff: &FarField, gain_db: &[f64], floor_db: f64) -> f64 {
    let g = &ff.grid;
    let peak = gain_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut worst: f64 = 0.0;
    for (ip, &p) in g.phi.iter().enumerate() {
        let Some(jp) = g.phi_index(-p) else { continue };
        for it in 0..g.theta.len() {
            let (a, b) = (gain_db[g.index(it, ip)], gain_db[g.index(it, jp)]);
            if a.max(b) >= peak - floor_db {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternMetrics {
    pub freq: f64,
    pub peak_gain_dbi: f64,
    pub peak_theta: f64,
    pub peak_phi: f64,
    pub hpbw_phi0: Result<f64, FarFieldError>,
    pub hpbw_phi90: Result<f64, FarFieldError>,
    pub xpd_phi0: Result<f64, FarFieldError>,
    pub xpd_phi90: Result<f64, FarFieldError>,
    pub aperture_efficiency: f64,
    pub accepted_power: f64,
    pub radiated_power: f64,
}

/// All pattern figures of merit for one far field.
pub fn pattern_metrics(
    ff: &FarField,
    accepted_power: f64,
    area: f64,
    pol: Polarization,
) -> Result<PatternMetrics, FarFieldError> {
    let gain = gain_pattern(ff, accepted_power)?;
    let peak = (0..gain.len()).fold(0, |m, i| if gain[i] > gain[m] { i } else { m });
    let np = ff.grid.phi.len();
    let beam = |phi| cut(ff, &gain, phi).and_then(|(a, v)| hpbw(&a, &v));
    Ok(PatternMetrics {
        freq: ff.freq,
        peak_gain_dbi: gain[peak],
        peak_theta: ff.grid.theta[peak / np],
        peak_phi: ff.grid.phi[peak % np],
        hpbw_phi0: beam(0.0),
        hpbw_phi90: beam(90.0),
        xpd_phi0: xpd(ff, 0.0, pol),
        xpd_phi90: xpd(ff, 90.0, pol),
        aperture_efficiency: aperture_efficiency(gain[peak], area, ff.freq),
        accepted_power,
        radiated_power: ff.radiated_power,
    })
}

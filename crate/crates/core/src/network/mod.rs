//! S-parameters from port recordings, Touchstone I/O and band metrics.

mod touchstone;

pub use touchstone::{parse_touchstone, read_touchstone, write_touchstone, TouchstoneError};

use crate::solver::{Drive, PortRecord, Recordings};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("incomplete S-matrix: no excitation for ports {0:?}")]
    IncompleteMatrix(Vec<usize>),
    #[error("recordings disagree: {0}")]
    Mismatch(String),
    #[error("frequencies must be strictly increasing and non-empty")]
    BadFrequencies,
    #[error("empty band [{0}, {1}] Hz")]
    EmptyBand(f64, f64),
    #[error("port {0} not in the matrix")]
    UnknownPort(usize),
}

/// Complex scattering matrix sampled over frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix {
    pub freqs: Vec<f64>,
    /// Port numbers in matrix order.
    pub ports: Vec<usize>,
    pub data: Vec<DMatrix<Complex64>>,
    pub z0: f64,
    /// Per column: was this port excited, and did that run converge.
    pub excited: Vec<bool>,
    pub converged: Vec<bool>,
    pub warnings: Vec<String>,
}

impl SMatrix {
    pub fn new(freqs: Vec<f64>, ports: Vec<usize>, data: Vec<DMatrix<Complex64>>) -> Result<Self, NetworkError> {
        if freqs.is_empty() || freqs.windows(2).any(|w| w[1] <= w[0]) || data.len() != freqs.len() {
            return Err(NetworkError::BadFrequencies);
        }
        let n = ports.len();
        if data.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(NetworkError::Mismatch("matrix size differs from port count".into()));
        }
        // A column that is not finite everywhere was never excited.
        let excited = (0..n)
            .map(|c| data.iter().all(|m| m.column(c).iter().all(|z| z.is_finite())))
            .collect();
        let mut s = Self {
            freqs,
            ports,
            data,
            z0: 50.0,
            excited,
            converged: vec![true; n],
            warnings: Vec::new(),
        };
        s.check_passivity();
        Ok(s)
    }

    pub fn nports(&self) -> usize {
        self.ports.len()
    }

    fn slot(&self, port: usize) -> Result<usize, NetworkError> {
        self.ports.iter().position(|&p| p == port).ok_or(NetworkError::UnknownPort(port))
    }

    /// `S[m][n]` over frequency, by port number.
    pub fn trace(&self, m: usize, n: usize) -> Result<Vec<Complex64>, NetworkError> {
        let (i, j) = (self.slot(m)?, self.slot(n)?);
        Ok(self.data.iter().map(|s| s[(i, j)]).collect())
    }

    pub fn trace_db(&self, m: usize, n: usize) -> Result<Vec<f64>, NetworkError> {
        Ok(self.trace(m, n)?.iter().map(|s| db20(s.norm())).collect())
    }

    /// Attach a warning for every frequency whose largest singular value
    /// exceeds `1 + 1e-6`. Unexcited columns are skipped.
    pub fn check_passivity(&mut self) {
        if self.excited.iter().any(|e| !e) {
            return;
        }
        for (f, m) in self.freqs.iter().zip(&self.data) {
            let sv = m.clone().svd(false, false).singular_values;
            let max = sv.iter().cloned().fold(0.0, f64::max);
            if max > 1.0 + 1e-6 {
                self.warnings.push(format!(
                    "non-passive at {:.4} GHz: largest singular value {max:.6}",
                    f * 1e-9
                ));
            }
        }
    }
}

pub fn db20(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Frequency samples `start, start + step, ..` up to and including `stop`.
pub fn freq_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Default DFT list: 24.25 to 29.5 GHz in 25 MHz steps.
pub fn default_freqs() -> Vec<f64> {
    freq_range(24.25e9, 29.5e9, 25e6)
}

/// `sum x[n] exp(-j w (n + offset) dt) dt`.
pub fn dft(x: &[f64], dt: f64, offset: f64, f: f64) -> Complex64 {
    let w = 2.0 * PI * f * dt;
    let step = Complex64::from_polar(1.0, -w);
    let mut rot = Complex64::from_polar(dt, -w * offset);
    let mut acc = Complex64::default();
    for (n, &v) in x.iter().enumerate() {
        acc += rot * v;
        rot *= step;
        // Renormalize the phasor against drift on long records.
        if n % 1024 == 1023 {
            rot = Complex64::from_polar(dt, -w * (n as f64 + 1.0 + offset));
        }
    }
    acc
}

/// Incident and reflected power waves of one port at `f`.
pub fn power_waves(rec: &PortRecord, dt: f64, f: f64, z0: f64) -> (Complex64, Complex64) {
    let v = dft(&rec.v, dt, 1.0, f);
    let i = dft(&rec.i, dt, 0.5, f);
    let k = 1.0 / (2.0 * z0.sqrt());
    ((v + i * z0) * k, (v - i * z0) * k)
}

/// Build S from one recording set per excited port. Ports without an
/// excitation are listed in the error unless `allow_partial`, in which case
/// their columns hold NaN and are marked unexcited.
pub fn extract_sparams(recs: &[Recordings], freqs: &[f64], allow_partial: bool) -> Result<SMatrix, NetworkError> {
    if freqs.is_empty() || freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NetworkError::BadFrequencies);
    }
    let first = recs.first().ok_or(NetworkError::IncompleteMatrix(vec![]))?;
    let mut ports: Vec<usize> = first.ports.iter().map(|p| p.index).collect();
    ports.sort_unstable();
    let z0 = first.ports.first().map(|p| p.impedance).unwrap_or(50.0);
    let n = ports.len();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut data = vec![DMatrix::from_element(n, n, nan); freqs.len()];
    let mut excited = vec![false; n];
    let mut converged = vec![false; n];
    for rec in recs {
        let Drive::Port(src) = rec.drive else {
            return Err(NetworkError::Mismatch("recording not driven by a port".into()));
        };
        let mut idx: Vec<usize> = rec.ports.iter().map(|p| p.index).collect();
        idx.sort_unstable();
        if idx != ports {
            return Err(NetworkError::Mismatch("port sets differ between recordings".into()));
        }
        let col = ports.iter().position(|&p| p == src).ok_or(NetworkError::UnknownPort(src))?;
        excited[col] = true;
        converged[col] = rec.converged;
        let src_rec = rec.port(src).ok_or(NetworkError::UnknownPort(src))?;
        for (fi, &f) in freqs.iter().enumerate() {
            let (a, _) = power_waves(src_rec, rec.dt, f, src_rec.impedance);
            for (row, &p) in ports.iter().enumerate() {
                let pr = rec.port(p).ok_or(NetworkError::UnknownPort(p))?;
                let (_, b) = power_waves(pr, rec.dt, f, pr.impedance);
                data[fi][(row, col)] = b / a;
            }
        }
    }
    let missing: Vec<usize> = ports.iter().zip(&excited).filter(|(_, &e)| !e).map(|(&p, _)| p).collect();
    if !missing.is_empty() && !allow_partial {
        return Err(NetworkError::IncompleteMatrix(missing));
    }
    let mut s = SMatrix {
        freqs: freqs.to_vec(),
        ports,
        data,
        z0,
        excited,
        converged,
        warnings: Vec::new(),
    };
    s.check_passivity();
    for (p, c) in s.ports.iter().zip(&s.converged) {
        if s.excited[s.ports.iter().position(|q| q == p).unwrap()] && !c {
            s.warnings.push(format!("excitation of port {p} did not converge"));
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMetric {
    pub f_lo: f64,
    pub f_hi: f64,
    pub bandwidth: f64,
    pub center: f64,
    pub threshold_db: f64,
}

/// Widest contiguous interval with `s_db <= threshold`, edges interpolated
/// linearly in dB.
pub fn bandwidth_at_threshold(freqs: &[f64], s_db: &[f64], threshold_db: f64) -> Option<BandMetric> {
    if freqs.len() < 2 || freqs.len() != s_db.len() {
        return None;
    }
    let ok: Vec<bool> = s_db.iter().map(|&v| v <= threshold_db).collect();
    let cross = |i: usize, j: usize| {
        let t = (threshold_db - s_db[i]) / (s_db[j] - s_db[i]);
        freqs[i] + t * (freqs[j] - freqs[i])
    };
    let mut best: Option<BandMetric> = None;
    let mut i = 0;
    while i < ok.len() {
        if !ok[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < ok.len() && ok[i + 1] {
            i += 1;
        }
        let end = i;
        let f_lo = if start > 0 { cross(start - 1, start) } else { freqs[start] };
        let f_hi = if end + 1 < ok.len() { cross(end, end + 1) } else { freqs[end] };
        if best.map_or(true, |b| f_hi - f_lo > b.bandwidth) {
            best = Some(BandMetric {
                f_lo,
                f_hi,
                bandwidth: f_hi - f_lo,
                center: 0.5 * (f_lo + f_hi),
                threshold_db,
            });
        }
        i += 1;
    }
    best.filter(|b| b.bandwidth > 0.0)
}

/// Largest `|S_m,port|` in dB over `m != port` and `band`.
pub fn worst_isolation(s: &SMatrix, port: usize, band: (f64, f64)) -> Result<f64, NetworkError> {
    let col = s.slot(port)?;
    let in_band: Vec<usize> = (0..s.freqs.len())
        .filter(|&i| s.freqs[i] >= band.0 && s.freqs[i] <= band.1)
        .collect();
    if in_band.is_empty() || band.0 > band.1 {
        return Err(NetworkError::EmptyBand(band.0, band.1));
    }
    let mut worst = f64::NEG_INFINITY;
    for &fi in &in_band {
        for row in 0..s.nports() {
            if row != col {
                worst = worst.max(db20(s.data[fi][(row, col)].norm()));
            }
        }
    }
    Ok(worst)
}

/// Per-port matching bands and their arithmetic mean bandwidth.
pub fn matching_summary(s: &SMatrix, threshold_db: f64) -> (Vec<(usize, Option<BandMetric>)>, Option<f64>) {
    let mut per_port = Vec::new();
    for (slot, &p) in s.ports.iter().enumerate() {
        if !s.excited[slot] {
            continue;
        }
        let db: Vec<f64> = s.data.iter().map(|m| db20(m[(slot, slot)].norm())).collect();
        per_port.push((p, bandwidth_at_threshold(&s.freqs, &db, threshold_db)));
    }
    let widths: Vec<f64> = per_port.iter().map(|(_, b)| b.map_or(0.0, |b| b.bandwidth)).collect();
    let mean = if widths.is_empty() {
        None
    } else {
        Some(widths.iter().sum::<f64>() / widths.len() as f64)
    };
    (per_port, mean)
}

/// Operating band of a port: its own -10 dB band, else n257.
pub fn operating_band(s: &SMatrix, port: usize, threshold_db: f64) -> Result<(f64, f64), NetworkError> {
    let db = s.trace_db(port, port)?;
    Ok(bandwidth_at_threshold(&s.freqs, &db, threshold_db)
        .map(|b| (b.f_lo, b.f_hi))
        .unwrap_or((24.25e9, 29.5e9)))
}

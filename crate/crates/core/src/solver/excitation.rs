use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    /// `exp(-((t - t0)/tau)^2) sin(2 pi f0 (t - t0))`.
    GaussianSine { f0: f64, tau: f64, t0: f64 },
    /// `exp(-((t - t0)/tau)^2)`.
    Gaussian { tau: f64, t0: f64 },
    /// Raised-cosine rise to 1 over `rise` seconds, then constant.
    Step { rise: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excitation {
    pub waveform: Waveform,
    /// Peak open-circuit source voltage (V) or sheet current density (A/m).
    pub amplitude: f64,
}

impl Excitation {
    /// Gaussian-modulated carrier whose spectrum falls by 20 dB at
    /// `f0 ± edge_offset`.
    pub fn gaussian_sine(f0: f64, edge_offset: f64) -> Self {
        // |S(f)| ~ exp(-(pi tau df)^2); -20 dB at df = edge_offset.
        let tau = (10f64.ln()).sqrt() / (PI * edge_offset);
        Self {
            waveform: Waveform::GaussianSine { f0, tau, t0: 4.5 * tau },
            amplitude: 1.0,
        }
    }

    /// Default antenna drive: 28 GHz carrier, -20 dB at 18 and 38 GHz.
    pub fn antenna_default() -> Self {
        Self::gaussian_sine(28e9, 10e9)
    }

    pub fn gaussian(tau: f64) -> Self {
        Self {
            waveform: Waveform::Gaussian { tau, t0: 4.5 * tau },
            amplitude: 1.0,
        }
    }

    pub fn step(rise: f64) -> Self {
        Self {
            waveform: Waveform::Step { rise },
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn value(&self, t: f64) -> f64 {
        let w = match self.waveform {
            Waveform::GaussianSine { f0, tau, t0 } => {
                let u = (t - t0) / tau;
                (-u * u).exp() * (2.0 * PI * f0 * (t - t0)).sin()
            }
            Waveform::Gaussian { tau, t0 } => {
                let u = (t - t0) / tau;
                (-u * u).exp()
            }
            Waveform::Step { rise } => {
                if t <= 0.0 {
                    0.0
                } else if t >= rise {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * t / rise).cos())
                }
            }
        };
        self.amplitude * w
    }

    /// Time after which the source is negligible (infinite for steps).
    pub fn duration(&self) -> f64 {
        match self.waveform {
            Waveform::GaussianSine { tau, t0, .. } | Waveform::Gaussian { tau, t0 } => t0 + 4.5 * tau,
            Waveform::Step { .. } => f64::INFINITY,
        }
    }

    /// Analytic spectrum magnitude relative to its peak, for the modulated
    /// and baseband Gaussians.
    pub fn relative_spectrum(&self, f: f64) -> Option<f64> {
        match self.waveform {
            Waveform::GaussianSine { f0, tau, .. } => {
                let g = |df: f64| (-(PI * tau * df).powi(2)).exp();
                let peak = g(0.0) - g(2.0 * f0);
                Some((g(f - f0) - g(f + f0)).abs() / peak)
            }
            Waveform::Gaussian { tau, .. } => Some((-(PI * tau * f).powi(2)).exp()),
            Waveform::Step { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_band_edges_within_3_db() {
        let e = Excitation::antenna_default();
        for f in [24.25e9, 29.5e9] {
            let db = 20.0 * e.relative_spectrum(f).unwrap().log10();
            assert!(db >= -3.0, "{f}: {db}");
        }
        let edge = 20.0 * e.relative_spectrum(38e9).unwrap().log10();
        assert!((edge + 20.0).abs() < 0.1, "{edge}");
    }

    #[test]
    fn pulse_is_negligible_at_time_origin() {
        let e = Excitation::antenna_default();
        assert!(e.value(0.0).abs() < 1e-8);
        assert!(e.value(e.duration()).abs() < 1e-8);
    }
}

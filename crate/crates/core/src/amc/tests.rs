use super::*;
use crate::network::freq_range;

#[test]
fn worked_example_values() {
    let p = AmcCellParams::default();
    assert_eq!(p.w, 2.65e-3);
    assert!((p.inductance() - 3.14e-9).abs() < 0.01e-9);
    assert!((p.capacitance() - 1.13e-13).abs() < 0.01e-13, "{}", p.capacitance());
    assert!((p.resonance() - 8.5e9).abs() < 0.1e9, "{}", p.resonance());
}

#[test]
fn impedance_limits_and_signs() {
    let p = AmcCellParams::default();
    assert!(surface_impedance(&p, 1.0).norm() < 1e-6);
    let fr = p.resonance();
    assert!(surface_impedance(&p, 0.5 * fr).im > 0.0);
    assert!(surface_impedance(&p, 1.5 * fr).im < 0.0);
}

#[test]
fn phase_examples() {
    assert!((reflection_phase(Complex64::default()) - 180.0).abs() < 1e-12);
    assert_eq!(reflection_phase(Complex64::new(0.0, f64::INFINITY)), 0.0);
    assert!((reflection_phase(Complex64::new(0.0, 1e12)).abs()) < 1e-6);
    assert!((reflection_phase(Complex64::new(0.0, ETA0)) - 90.0).abs() < 1e-9);
    let p = AmcCellParams::default();
    assert!((reflection_phase(surface_impedance(&p, 1e3)) - 180.0).abs() < 1e-3);
    assert!(reflection_phase(surface_impedance(&p, p.resonance())).abs() < 0.1);
}

#[test]
fn unwrapped_phase_decreases_through_resonance() {
    let p = AmcCellParams::default();
    let c = analytic_curve(&p, &freq_range(1e9, 20e9, 0.05e9));
    assert!(c.phase_deg.windows(2).all(|w| w[1] < w[0]));
    assert!(c.phase_deg[0] < 180.0 && c.phase_deg.last().unwrap() > &-180.0);
}

#[test]
fn band_brackets_resonance_with_90_degree_edges() {
    let p = AmcCellParams::default();
    let (lo, hi) = amc_band(&p, 1e9, 20e9).unwrap().unwrap();
    let fr = p.resonance();
    assert!(lo < fr && fr < hi);
    assert!((reflection_phase(surface_impedance(&p, lo)) - 90.0).abs() < 0.05);
    assert!((reflection_phase(surface_impedance(&p, hi)) + 90.0).abs() < 0.05);
    assert_eq!(amc_band(&p, 20e9, 30e9).unwrap(), None);
}

#[test]
fn smaller_gap_lowers_both_edges() {
    let mut prev: Option<(f64, f64)> = None;
    for gap in [0.4e-3, 0.2e-3, 0.1e-3, 0.05e-3] {
        let p = AmcCellParams {
            gap,
            ..AmcCellParams::default()
        };
        let b = amc_band(&p, 1e9, 20e9).unwrap().unwrap();
        if let Some(q) = prev {
            assert!(b.0 < q.0 && b.1 < q.1, "{b:?} vs {q:?}");
        }
        prev = Some(b);
    }
}

#[test]
fn invalid_cells_are_rejected() {
    let p = AmcCellParams {
        gap: 0.0,
        ..AmcCellParams::default()
    };
    assert!(p.validate().is_err());
    let p = AmcCellParams {
        w: 0.1e-3,
        gap: 0.2e-3,
        ..AmcCellParams::default()
    };
    assert!(p.validate().is_err());
}

#[test]
fn csv_layout() {
    let p = AmcCellParams::default();
    let c = analytic_curve(&p, &[8e9, 9e9]);
    let text = format_phase_csv(&[&c]);
    assert!(text.starts_with("freq_ghz,phase_deg,model\n8,"));
    assert!(text.trim_end().ends_with(",analytic"));
}

#[test]
fn fdtd_pec_calibration() {
    let p = AmcCellParams::default();
    let freqs = freq_range(4e9, 14e9, 1e9);
    let c = reflection_phase_fdtd(&p, CellKind::Pec, &freqs, &FdtdPhaseOptions::default()).unwrap();
    for (f, ph) in freqs.iter().zip(&c.phase_deg) {
        assert!((ph.abs() - 180.0).abs() < 2.0, "{f}: {ph}");
    }
}

/// Grounded slab as a shorted transmission line.
fn slab_phase(p: &AmcCellParams, f: f64) -> f64 {
    let n = p.eps_r.sqrt();
    let k = 2.0 * PI * f / crate::constants::C0 * n;
    let zin = Complex64::new(0.0, ETA0 / n * (k * p.h).tan());
    reflection_phase(zin)
}

#[test]
fn fdtd_grounded_slab_matches_line_model() {
    let p = AmcCellParams::default();
    let freqs = freq_range(4e9, 14e9, 1e9);
    let c = reflection_phase_fdtd(&p, CellKind::Slab, &freqs, &FdtdPhaseOptions::default()).unwrap();
    for (f, ph) in freqs.iter().zip(&c.phase_deg) {
        let model = slab_phase(&p, *f);
        let d = (ph - model + 180.0).rem_euclid(360.0) - 180.0;
        assert!(d.abs() < 5.0, "{f}: fdtd {ph} model {model}");
    }
}

use super::*;
use crate::scene::Polarization;

const F: f64 = 28e9;

fn dipole_record(dipoles: &[([f64; 3], Complex64)], a: f64, n: usize) -> HuygensRecord {
    crate::validation::dipole_record(dipoles, F, a, n)
}

fn peak(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn hertzian_dipole_directivity() {
    let rec = dipole_record(&[([0.0; 3], Complex64::new(1e-3, 0.0))], 3e-3, 30);
    let ff = ntff(&rec, F, &AngleGrid::default()).unwrap();
    let d = ff.directivity_dbi();
    assert!((peak(&d) - 1.76).abs() < 0.1, "peak {}", peak(&d));
    // Null along the axis.
    assert!(d[ff.grid.index(0, 0)] < peak(&d) - 40.0);
    // Pattern integral against the surface flux.
    let p = ff.integrated_power();
    assert!((p / ff.radiated_power - 1.0).abs() < 0.01, "{p} vs {}", ff.radiated_power);
}

#[test]
fn lossless_gain_equals_directivity() {
    let rec = dipole_record(&[([0.0; 3], Complex64::new(1e-3, 0.0))], 3e-3, 16);
    let ff = ntff(&rec, F, &AngleGrid::uniform(2.0)).unwrap();
    let g = gain_pattern(&ff, ff.integrated_power()).unwrap();
    assert!((peak(&g) - peak(&ff.directivity_dbi())).abs() < 0.05);
    let half = gain_pattern(&ff, 0.5 * ff.integrated_power()).unwrap();
    assert!(g.iter().zip(&half).filter(|(a, _)| **a > -100.0).all(|(a, b)| (b - a - 3.0103).abs() < 1e-3));
    assert_eq!(gain_pattern(&ff, 0.0), Err(FarFieldError::NonPositivePower(0.0)));
}

#[test]
fn ntff_is_linear() {
    let rec = dipole_record(&[([0.0; 3], Complex64::new(1e-3, 0.0))], 3e-3, 8);
    let mut scaled = rec.clone();
    let s = Complex64::new(0.0, 2.0);
    for smp in &mut scaled.samples {
        smp.e[0].iter_mut().chain(smp.h[0].iter_mut()).for_each(|v| *v *= s);
    }
    let grid = AngleGrid::uniform(10.0);
    let a = ntff(&rec, F, &grid).unwrap();
    let b = ntff(&scaled, F, &grid).unwrap();
    for (x, y) in a.e_theta.iter().zip(&b.e_theta) {
        assert!((x * s - y).norm() <= 1e-9 * (1.0 + y.norm()));
    }
}

#[test]
fn missing_frequency_lists_available() {
    let rec = dipole_record(&[([0.0; 3], Complex64::new(1e-3, 0.0))], 3e-3, 4);
    match ntff(&rec, 30e9, &AngleGrid::uniform(10.0)) {
        Err(FarFieldError::FrequencyAbsent { available, .. }) => assert_eq!(available, vec![F]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn two_element_array_factor_nulls() {
    // z dipoles on the x axis, half a wavelength apart, in phase: the array
    // factor vanishes along the x axis (theta 90, phi 0 and 180).
    let d = C0 / F / 2.0;
    let il = Complex64::new(1e-3, 0.0);
    let rec = dipole_record(&[([-d / 2.0, 0.0, 0.0], il), ([d / 2.0, 0.0, 0.0], il)], 5e-3, 40);
    let grid = AngleGrid {
        theta: vec![90.0],
        phi: (0..3600).map(|i| i as f64 * 0.1).collect(),
    };
    let ff = ntff(&rec, F, &grid).unwrap();
    let u = ff.intensity();
    // Minimum within 20 degrees of `centre`, as a signed offset from it.
    let offset = |centre: f64| {
        let mut best = (f64::INFINITY, 0.0);
        for (i, &p) in grid.phi.iter().enumerate() {
            let off = (p - centre + 180.0).rem_euclid(360.0) - 180.0;
            if off.abs() <= 20.0 && u[i] < best.0 {
                best = (u[i], off);
            }
        }
        best.1
    };
    assert!(offset(0.0).abs() < 1.0);
    assert!(offset(180.0).abs() < 1.0);
    // Broadside sum is far above the endfire null.
    assert!(peak(&u) > 1e6 * u[0]);
}

#[test]
fn ground_image_doubles_a_vertical_dipole() {
    // A vertical dipole just above a PEC plane sees an in-phase image.
    let il = Complex64::new(1e-3, 0.0);
    let h = 0.5e-3;
    let full = dipole_record(&[([0.0, 0.0, h], il), ([0.0, 0.0, -h], il)], 3e-3, 24);
    let mut half = full.clone();
    half.ground_image = true;
    // Lower face gone, side faces clipped to the upper half.
    half.samples.retain(|s| s.pos[2] > 0.0);
    let grid = AngleGrid::uniform(5.0);
    let a = ntff(&full, F, &grid).unwrap();
    let b = ntff(&half, F, &grid).unwrap();
    for it in 0..grid.theta.len() {
        if grid.theta[it] >= 90.0 {
            continue;
        }
        for ip in 0..grid.phi.len() {
            let n = grid.index(it, ip);
            let (x, y) = (a.e_theta[n], b.e_theta[n]);
            assert!((x - y).norm() <= 0.02 * peak(&a.intensity()).sqrt() * (2.0 * ETA0).sqrt(), "{x} {y}");
        }
    }
}

#[test]
fn hpbw_of_cosine_powers() {
    let angle: Vec<f64> = (-90..=90).map(|a| a as f64).collect();
    for q in [1.0, 10.0] {
        let db: Vec<f64> = angle
            .iter()
            .map(|a: &f64| 10.0 * a.to_radians().cos().powf(2.0 * q).max(1e-30).log10())
            .collect();
        let exact = 2.0 * 2f64.powf(-1.0 / (2.0 * q)).acos().to_degrees();
        let got = hpbw(&angle, &db).unwrap();
        assert!((got - exact).abs() < 0.1, "q={q}: {got} vs {exact}");
    }
    assert!((2.0 * 2f64.powf(-0.5).acos().to_degrees() - 90.0).abs() < 1e-9);
}

#[test]
fn one_sided_beam_is_an_error() {
    let angle: Vec<f64> = (0..=90).map(|a| a as f64).collect();
    let db: Vec<f64> = angle.iter().map(|a| -0.1 * a).collect();
    assert_eq!(hpbw(&angle, &db), Err(FarFieldError::OneSidedBeam("negative")));
}

fn synthetic(co: f64, cross: f64) -> FarField {
    let grid = AngleGrid::uniform(5.0);
    let n = grid.len();
    FarField {
        freq: F,
        e_theta: (0..n).map(|i| Complex64::new(co * grid.theta[i / grid.phi.len()].to_radians().cos().max(0.0), 0.0)).collect(),
        e_phi: (0..n).map(|i| Complex64::new(cross * grid.theta[i / grid.phi.len()].to_radians().cos().max(0.0), 0.0)).collect(),
        grid,
        radiated_power: 0.0,
        port_waves: vec![],
        upper_half_only: true,
    }
}

#[test]
fn xpd_definition_and_cap() {
    let pure = synthetic(1.0, 0.0);
    assert_eq!(xpd(&pure, 0.0, Polarization::X).unwrap(), 60.0);
    let mixed = synthetic(1.0, 0.1);
    assert!((xpd(&mixed, 0.0, Polarization::X).unwrap() - 20.0).abs() < 1e-9);
    let zero = synthetic(0.0, 0.0);
    assert_eq!(xpd(&zero, 0.0, Polarization::X), Err(FarFieldError::UndefinedXpd));
}

#[test]
fn aperture_efficiency_examples() {
    let a = 14.178e-3 * 14.178e-3;
    assert!((aperture_efficiency(11.81, a, 28e9) - 0.689).abs() < 0.005);
    let l = C0 / 28e9;
    let g = 10.0 * (4.0 * PI * a / (l * l)).log10();
    assert!((aperture_efficiency(g, a, 28e9) - 1.0).abs() < 1e-12);
    assert!((aperture_efficiency(g, 2.0 * a, 28e9) - 0.5).abs() < 1e-12);
}

#[test]
fn superposition_rules() {
    let mut a = synthetic(1.0, 0.0);
    a.port_waves = vec![(1, Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0))];
    let mut b = synthetic(0.0, 1.0);
    b.port_waves = vec![(1, Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.0))];
    let one = superpose_excitations(&[a.clone(), b.clone()], &[Complex64::new(2.0, 0.0), Complex64::default()]).unwrap();
    assert!(one.e_theta.iter().zip(&a.e_theta).all(|(x, y)| *x == y * 2.0));
    assert!((one.accepted_power().unwrap() - 0.5 * (4.0 - 0.04)).abs() < 1e-12);
    let zero = superpose_excitations(&[a.clone(), b.clone()], &[Complex64::default(); 2]).unwrap();
    assert!(zero.intensity().iter().all(|&u| u == 0.0));
    assert_eq!(
        superpose_excitations(&[a, b], &[Complex64::default()]),
        Err(FarFieldError::WeightCount { expected: 2, got: 1 })
    );
}

#[test]
fn mirror_symmetry_of_symmetric_pattern() {
    let ff = synthetic(1.0, 0.3);
    let g = gain_pattern(&ff, 1.0).unwrap();
    assert!(mirror_symmetry_error(&ff, &g, 40.0) < 1e-9);
}

#[test]
fn csv_header_and_polar_cut() {
    let ff = synthetic(1.0, 0.0);
    let g = gain_pattern(&ff, 1.0).unwrap();
    let text = format_pattern_csv(&ff, &g);
    assert!(text.starts_with("theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi,gain_dbi\n"));
    assert_eq!(text.lines().count(), ff.grid.len() + 1);
    let (a, v) = cut(&ff, &g, 0.0).unwrap();
    let (ra, rv) = resample_cut(&a, &v, 0.5);
    assert_eq!(ra.len(), 721);
    assert!((rv[360] - v[a.iter().position(|&x| x == 0.0).unwrap()]).abs() < 1e-12);
    assert!(format_polar_cut(&ra, &rv).lines().nth(1).unwrap().starts_with("-180.0 "));
}

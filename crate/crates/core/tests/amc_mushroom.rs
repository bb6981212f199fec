use yeefield::amc::{band_of, reflection_phase_fdtd, AmcCellParams, CellKind, FdtdPhaseOptions};
use yeefield::network::freq_range;

/// The full mushroom cell crosses 0° near the lumped-model resonance. The
/// tolerance is loose because the LC model itself is first order.
#[test]
fn mushroom_zero_crossing_near_lc_resonance() {
    let p = AmcCellParams::default();
    let freqs = freq_range(4e9, 14e9, 0.1e9);
    let c = reflection_phase_fdtd(&p, CellKind::Mushroom, &freqs, &FdtdPhaseOptions::default()).unwrap();
    let zero = (0..freqs.len() - 1)
        .find(|&i| c.phase_deg[i] >= 0.0 && c.phase_deg[i + 1] < 0.0 && c.phase_deg[i] - c.phase_deg[i + 1] < 180.0)
        .map(|i| {
            let (a, b) = (c.phase_deg[i], c.phase_deg[i + 1]);
            freqs[i] + a / (a - b) * (freqs[i + 1] - freqs[i])
        })
        .expect("no 0° crossing");
    eprintln!("fdtd zero {zero:.4e}, analytic {:.4e}, band {:?}", p.resonance(), band_of(&c));
    assert!((zero / p.resonance() - 1.0).abs() < 0.15);
}

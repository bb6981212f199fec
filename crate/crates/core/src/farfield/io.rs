use super::FarField;
use std::fmt::Write as _;
use std::path::Path;

/// Full grid as `theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi,gain_dbi`.
pub fn format_pattern_csv(ff: &FarField, gain_dbi: &[f64]) -> String {
    let g = &ff.grid;
    let mut out = String::from("theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi,gain_dbi\n");
    for (it, th) in g.theta.iter().enumerate() {
        for (ip, ph) in g.phi.iter().enumerate() {
            let n = g.index(it, ip);
            let (et, ep) = (ff.e_theta[n], ff.e_phi[n]);
            let _ = writeln!(
                out,
                "{th},{ph},{:e},{:e},{:e},{:e},{:.6}",
                et.re, et.im, ep.re, ep.im, gain_dbi[n]
            );
        }
    }
    out
}

pub fn write_pattern_csv(ff: &FarField, gain_dbi: &[f64], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, format_pattern_csv(ff, gain_dbi))
}

/// Two whitespace-separated columns, angle (deg) and gain (dBi), for polar plots.
pub fn format_polar_cut(angle: &[f64], db: &[f64]) -> String {
    let mut out = String::from("# angle_deg gain_dbi\n");
    for (a, v) in angle.iter().zip(db) {
        let _ = writeln!(out, "{a:.1} {v:.6}");
    }
    out
}

pub fn write_polar_cut(angle: &[f64], db: &[f64], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, format_polar_cut(angle, db))
}

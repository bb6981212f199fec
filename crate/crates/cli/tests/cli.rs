use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn yeefield(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yeefield"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.trim_start().strip_prefix('=')))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
        .trim()
}

#[test]
fn build_reports_ports_and_vias() {
    let dir = tempfile::tempdir().unwrap();
    let o = yeefield(&["build", "single_with_frame", "--out", "a"], dir.path());
    assert!(o.status.success());
    let dump = std::fs::read_to_string(dir.path().join("a/scene.txt")).unwrap();
    assert_eq!(dump.lines().filter(|l| l.starts_with("port ")).count(), 2, "{dump}");
    assert!(dump.contains("frame_via"));
    assert!(dir.path().join("a/mesh.txt").exists());

    let o = yeefield(&["build", "array_no_frame", "--out", "b"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("8 ports, 0 vias"), "{}", stdout(&o));
}

#[test]
fn oversized_frame_cell_fails_build() {
    let dir = tempfile::tempdir().unwrap();
    let o = yeefield(&["build", "single_with_frame", "--set", "w_ebg_mm=3.0"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("w_ebg"));
}

#[test]
fn metrics_from_fixture_files() {
    let dir = tempfile::tempdir().unwrap();
    let off = 10f64.powf(-15.0 / 20.0);
    let mut ts = String::from("# GHz S RI R 50\n");
    for f in [27.0, 27.5, 28.0, 28.5, 29.0] {
        let _ = write!(ts, "{f}");
        for r in 0..8 {
            for c in 0..8 {
                let _ = write!(ts, " {} 0", if r == c { 0.1 } else { off });
            }
        }
        ts.push('\n');
    }
    std::fs::write(dir.path().join("f.s8p"), ts).unwrap();

    // Flat-topped fixture pattern peaking at 11.81 dBi.
    let mut csv = String::from("theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi,gain_dbi\n");
    for it in 0..=36 {
        for ip in 0..72 {
            let (t, p) = (it as f64 * 5.0, ip as f64 * 5.0);
            let e = t.to_radians().cos().max(0.0);
            let _ = writeln!(csv, "{t},{p},{e:e},0e0,0e0,0e0,{:.6}", 11.81 + 20.0 * e.max(1e-6).log10());
        }
    }
    std::fs::write(dir.path().join("p.csv"), csv).unwrap();

    let o = yeefield(
        &[
            "metrics",
            "array_with_frame",
            "--touchstone",
            "f.s8p",
            "--pattern",
            "p.csv",
            "--area",
            "201.015684",
            "--freq",
            "28",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "worst_isolation_db"), "-15.000");
    assert_eq!(value(&text, "peak_gain_dbi"), "11.810");
    let eta: f64 = value(&text, "aperture_efficiency").parse().unwrap();
    assert!((eta - 0.689).abs() < 0.005, "{eta}");
}

#[test]
fn empty_touchstone_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.s2p"), "").unwrap();
    let o = yeefield(&["metrics", "single_with_frame", "--touchstone", "e.s2p"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn unknown_sweep_parameter_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = yeefield(&["sweep", "amc_cell", "--param", "foo", "--range", "0.1:0.3:3"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("foo") && err.contains("gap_mm"), "{err}");
}

#[test]
fn amc_gap_sweep_has_monotone_band_edges() {
    let dir = tempfile::tempdir().unwrap();
    let o = yeefield(
        &["sweep", "amc_cell", "--param", "gap_mm", "--range", "0.1:0.3:3", "--out", "s"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3, "{table}");
    // A wider gap lowers the capacitance, raising both edges.
    for w in rows.windows(2) {
        assert!(w[1][2] > w[0][2] && w[1][3] > w[0][3], "{table}");
    }
    assert!(dir.path().join("s/point2/phase.csv").exists());
}

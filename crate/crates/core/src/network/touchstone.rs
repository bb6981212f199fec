//! Touchstone v1 files, always written as `# GHz S RI R 50`.

use super::SMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TouchstoneError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot infer port count from `{0}`")]
    PortCount(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Network(#[from] super::NetworkError),
}

pub fn write_touchstone(s: &SMatrix, path: &Path) -> Result<(), TouchstoneError> {
    std::fs::write(path, format_touchstone(s))?;
    Ok(())
}

pub fn format_touchstone(s: &SMatrix) -> String {
    let n = s.nports();
    let mut out = String::new();
    let _ = writeln!(out, "! yeefield {n}-port S-parameters");
    let _ = writeln!(out, "! ports {:?}", s.ports);
    for w in &s.warnings {
        let _ = writeln!(out, "! warning: {w}");
    }
    out.push_str("# GHz S RI R 50\n");
    let pair = |c: Complex64| format!("{:?} {:?}", c.re, c.im);
    for (f, m) in s.freqs.iter().zip(&s.data) {
        let freq = format!("{:?}", f * 1e-9);
        match n {
            1 => {
                let _ = writeln!(out, "{freq} {}", pair(m[(0, 0)]));
            }
            2 => {
                // Two-port order is S11 S21 S12 S22.
                let _ = writeln!(
                    out,
                    "{freq} {} {} {} {}",
                    pair(m[(0, 0)]),
                    pair(m[(1, 0)]),
                    pair(m[(0, 1)]),
                    pair(m[(1, 1)])
                );
            }
            _ => {
                for r in 0..n {
                    for (chunk_no, chunk) in (0..n).collect::<Vec<_>>().chunks(4).enumerate() {
                        let vals: Vec<String> = chunk.iter().map(|&c| pair(m[(r, c)])).collect();
                        if r == 0 && chunk_no == 0 {
                            let _ = writeln!(out, "{freq} {}", vals.join(" "));
                        } else {
                            let _ = writeln!(out, "{} {}", " ".repeat(freq.len()), vals.join(" "));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Read a `.sNp` file; the port count comes from the extension.
pub fn read_touchstone(path: &Path) -> Result<SMatrix, TouchstoneError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let n: usize = ext
        .strip_prefix('s')
        .and_then(|e| e.strip_suffix('p'))
        .and_then(|d| d.parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| TouchstoneError::PortCount(path.display().to_string()))?;
    parse_touchstone(&std::fs::read_to_string(path)?, n)
}

pub fn parse_touchstone(text: &str, n: usize) -> Result<SMatrix, TouchstoneError> {
    let mut scale = 1e9;
    let mut format = "MA".to_string();
    let mut z0 = 50.0;
    let mut seen_option = false;
    let mut tokens: Vec<(usize, f64)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let err = |msg: String| TouchstoneError::Parse { line, msg };
        let body = raw.split('!').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if body.starts_with('#') {
            if seen_option {
                return Err(err("second option line".into()));
            }
            seen_option = true;
            let words: Vec<String> = body[1..].split_whitespace().map(|w| w.to_ascii_uppercase()).collect();
            let mut k = 0;
            while k < words.len() {
                match words[k].as_str() {
                    "HZ" => scale = 1.0,
                    "KHZ" => scale = 1e3,
                    "MHZ" => scale = 1e6,
                    "GHZ" => scale = 1e9,
                    "S" => {}
                    "Y" | "Z" | "H" | "G" => return Err(err(format!("parameter {} unsupported", words[k]))),
                    "RI" | "MA" | "DB" => format = words[k].clone(),
                    "R" => {
                        k += 1;
                        z0 = words
                            .get(k)
                            .and_then(|w| w.parse().ok())
                            .ok_or_else(|| err("R needs a number".into()))?;
                    }
                    other => return Err(err(format!("unknown option `{other}`"))),
                }
                k += 1;
            }
            continue;
        }
        for w in body.split_whitespace() {
            let v: f64 = w.parse().map_err(|_| err(format!("not a number: `{w}`")))?;
            tokens.push((line, v));
        }
    }
    let per = 1 + 2 * n * n;
    if tokens.is_empty() {
        return Err(TouchstoneError::Parse {
            line: text.lines().count().max(1),
            msg: "no data records".into(),
        });
    }
    if tokens.len() % per != 0 {
        let line = tokens.last().map_or(0, |t| t.0);
        return Err(TouchstoneError::Parse {
            line,
            msg: format!("{} values is not a multiple of {per} for {n} ports", tokens.len()),
        });
    }
    let mut freqs = Vec::new();
    let mut data = Vec::new();
    for rec in tokens.chunks(per) {
        let f = rec[0].1 * scale;
        if freqs.last().is_some_and(|&p| f <= p) {
            return Err(TouchstoneError::Parse {
                line: rec[0].0,
                msg: "frequencies must increase".into(),
            });
        }
        freqs.push(f);
        let mut m = DMatrix::from_element(n, n, Complex64::default());
        for k in 0..n * n {
            let (a, b) = (rec[1 + 2 * k].1, rec[2 + 2 * k].1);
            let c = match format.as_str() {
                "RI" => Complex64::new(a, b),
                "MA" => Complex64::from_polar(a, b.to_radians()),
                _ => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
            };
            // Two-port files list S21 before S12.
            let (r, col) = if n == 2 { (k % 2, k / 2) } else { (k / n, k % n) };
            m[(r, col)] = c;
        }
        data.push(m);
    }
    let mut s = SMatrix::new(freqs, (1..=n).collect(), data)?;
    s.z0 = z0;
    Ok(s)
}

//! Raw port-recording dump.
//!
//! Little-endian layout: 8-byte magic `YEEFREC1`, then `u64` version,
//! port count and step count, then `f64` dt. Each port follows as `u64`
//! index, `f64` impedance, `steps` voltages and `steps` currents.
//! A text manifest with the same name plus `.txt` accompanies the file.

use super::{PortRecord, Recordings, SolverError};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 8] = b"YEEFREC1";
const VERSION: u64 = 1;

pub fn write_dump(rec: &Recordings, path: &Path) -> Result<(), SolverError> {
    let mut buf = Vec::with_capacity(40 + rec.ports.len() * (16 + 16 * rec.steps));
    buf.extend_from_slice(MAGIC);
    for v in [VERSION, rec.ports.len() as u64, rec.steps as u64] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&rec.dt.to_le_bytes());
    for p in &rec.ports {
        if p.v.len() != rec.steps || p.i.len() != rec.steps {
            return Err(SolverError::Format(format!("port {} length mismatch", p.index)));
        }
        buf.extend_from_slice(&(p.index as u64).to_le_bytes());
        buf.extend_from_slice(&p.impedance.to_le_bytes());
        for x in p.v.iter().chain(&p.i) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, buf)?;

    let mut m = String::new();
    let _ = writeln!(m, "format yeefield-recording v{VERSION} little-endian f64");
    let _ = writeln!(m, "dt_s {:e}", rec.dt);
    let _ = writeln!(m, "steps {}", rec.steps);
    let _ = writeln!(m, "converged {}", rec.converged);
    let _ = writeln!(m, "drive {:?}", rec.drive);
    let _ = writeln!(m, "excitation {:?}", rec.excitation);
    for p in &rec.ports {
        let _ = writeln!(m, "port {} impedance_ohm {} v_at (n+1)dt i_at (n+1/2)dt", p.index, p.impedance);
    }
    let mut manifest = path.as_os_str().to_owned();
    manifest.push(".txt");
    fs::write(manifest, m)?;
    Ok(())
}

/// Port records and dt from a dump file.
pub fn read_dump(path: &Path) -> Result<(f64, Vec<PortRecord>), SolverError> {
    let bytes = fs::read(path)?;
    let bad = |what: &str| SolverError::Format(what.to_string());
    if bytes.len() < 40 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic"));
    }
    let mut pos = 8;
    let mut word = || -> Result<[u8; 8], SolverError> {
        let w = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| bad("truncated"))?
            .try_into()
            .map_err(|_| bad("truncated"))?;
        pos += 8;
        Ok(w)
    };
    let version = u64::from_le_bytes(word()?);
    if version != VERSION {
        return Err(SolverError::Format(format!("unsupported version {version}")));
    }
    let nports = u64::from_le_bytes(word()?) as usize;
    let steps = u64::from_le_bytes(word()?) as usize;
    let dt = f64::from_le_bytes(word()?);
    let mut ports = Vec::with_capacity(nports);
    for _ in 0..nports {
        let index = u64::from_le_bytes(word()?) as usize;
        let impedance = f64::from_le_bytes(word()?);
        let mut series = |n: usize| -> Result<Vec<f64>, SolverError> {
            (0..n).map(|_| word().map(f64::from_le_bytes)).collect()
        };
        let v = series(steps)?;
        let i = series(steps)?;
        ports.push(PortRecord { index, impedance, v, i });
    }
    Ok((dt, ports))
}

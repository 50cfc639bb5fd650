//! Trajectory and summary artifacts.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};

/// Round-trip scientific formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Header row of [`write_trajectory_csv`].
pub fn csv_header(rec: &TrajectoryRecord) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(rec.param_names.iter().cloned());
    h.extend(["risk", "psi_max_dev", "grad_norm", "raw_grad_norm"].map(String::from));
    if !rec.tags.is_empty() {
        h.push("regime".into());
    }
    h.extend(rec.extra_names.iter().cloned());
    h
}

/// One row per recorded time.
pub fn write_trajectory_csv<W: Write>(rec: &TrajectoryRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(rec)).map_err(csv_err)?;
    for n in 0..rec.len() {
        let mut row = vec![fmt_f64(rec.times[n])];
        row.extend(rec.states[n].iter().map(|&x| fmt_f64(x)));
        for col in [&rec.risk, &rec.psi_max_dev, &rec.grad_norm, &rec.raw_grad_norm] {
            row.push(fmt_f64(col[n]));
        }
        if let Some(tag) = rec.tags.get(n) {
            row.push(tag.clone());
        }
        row.extend(rec.extras[n].iter().map(|&x| fmt_f64(x)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_csv_bytes(rec: &TrajectoryRecord) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trajectory_csv(rec, &mut buf)?;
    Ok(buf)
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

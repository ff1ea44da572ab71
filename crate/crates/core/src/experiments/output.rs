use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::{push_float, Trajectory};

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // create_dir_all succeeds on an existing read-only directory
    let probe = dir.join(".gamedyn-write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<PathBuf> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    traj.write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// One column per curve, all aligned on `times`.
pub(crate) fn write_curves(path: &Path, times: &[f64], columns: &[(String, Vec<f64>)]) -> Result<PathBuf> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("t");
    for (name, _) in columns {
        header.push(',');
        header.push_str(name);
    }
    let io = |e| Error::io(path, e);
    writeln!(w, "{header}").map_err(io)?;
    let mut line = String::new();
    for (k, &t) in times.iter().enumerate() {
        line.clear();
        push_float(&mut line, t);
        for (_, col) in columns {
            line.push(',');
            push_float(&mut line, col[k]);
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(path.to_path_buf())
}

/// Keep at most `max` evenly spaced points, always including the last.
pub(crate) fn decimate(xs: &[f64], ys: &[f64], max: usize) -> (Vec<f64>, Vec<f64>) {
    let stride = xs.len().div_ceil(max.max(1)).max(1);
    let last = xs.len().saturating_sub(1);
    (0..xs.len())
        .filter(|k| k % stride == 0 || *k == last)
        .map(|k| (xs[k], ys[k]))
        .unzip()
}

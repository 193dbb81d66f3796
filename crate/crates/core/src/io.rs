//! Artifact formats: CSV tables, raw field snapshots with a JSON sidecar,
//! and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Rep, SpectralGrid};

pub const SCHEMA_VERSION: u32 = 1;

/// Writes rows with a header taken from the field names, in declaration order.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::MalformedSeries(format!("csv: {other:?}")),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Sidecar of a raw snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub rep: Rep,
    pub t: f64,
    pub dtype: String,
}

/// Writes `<stem>.bin` (little-endian complex128, row-major, re then im) and
/// `<stem>.json`.
pub fn write_snapshot(dir: &Path, stem: &str, field: &Field, t: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.bin"));
    let mut bytes = Vec::with_capacity(field.values.len() * 16);
    for z in &field.values {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let meta = SnapshotMeta { n: field.grid.n, l: field.grid.l, rep: field.rep, t, dtype: "complex128".into() };
    write_json(&dir.join(format!("{stem}.json")), &meta)?;
    Ok(bin)
}

pub fn read_snapshot(dir: &Path, stem: &str) -> Result<(Field, f64)> {
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json")))?)?;
    let bytes = fs::read(dir.join(format!("{stem}.bin")))?;
    let width = match meta.dtype.as_str() {
        "complex128" => 16,
        "complex64" => 8,
        other => return Err(Error::MalformedSeries(format!("unknown dtype {other}"))),
    };
    let grid = SpectralGrid::new(meta.n, meta.l)?;
    if bytes.len() != grid.len() * width {
        return Err(Error::MalformedSeries(format!("expected {} bytes, found {}", grid.len() * width, bytes.len())));
    }
    let values = bytes
        .chunks_exact(width)
        .map(|c| {
            if width == 16 {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            } else {
                Complex64::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
                )
            }
        })
        .collect();
    Ok((Field::from_values(grid, meta.rep, values)?, meta.t))
}

/// Run manifest; the only artifact carrying wall-clock data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub cfg: serde_json::Value,
    pub seeds: Vec<u64>,
    pub git_describe: String,
    pub started: u64,
    pub finished: u64,
    pub artifacts: Vec<String>,
}

pub fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

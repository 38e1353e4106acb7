//! Stage files inside a run directory: `<dir>/<stage>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use oodtrack_core::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const STAGES: [&str; 7] = ["detect", "meta-train", "meta-apply", "track", "embed", "cluster", "evaluate"];

pub fn stage_path(run: &Path, stage: &str) -> PathBuf {
    run.join(format!("{stage}.json"))
}

pub fn read_stage<T: DeserializeOwned>(run: &Path, stage: &str) -> Result<T, Error> {
    let path = stage_path(run, stage);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_stage<T: Serialize>(run: &Path, stage: &str, value: &T) -> Result<PathBuf, Error> {
    let path = stage_path(run, stage);
    write_json(&path, value)?;
    Ok(path)
}

/// Serializes rows to CSV in memory so a failure never leaves half a file.
pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_bytes(path, &bytes)
}

/// CSV with an explicit header, for tables built from loose JSON.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_bytes(path, &bytes)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

//! Report writers. JSON reports carry no timestamps, so identical inputs give
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::RunError;

/// Output directory and file stem of one run.
#[derive(Clone, Debug)]
pub struct ReportPaths {
    dir: PathBuf,
    stem: String,
}

impl ReportPaths {
    pub fn new(dir: impl Into<PathBuf>, stem: impl Into<String>) -> Result<Self, RunError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
        Ok(Self { dir, stem: stem.into() })
    }

    pub fn json(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.stem))
    }

    pub fn csv(&self) -> PathBuf {
        self.dir.join(format!("{}.csv", self.stem))
    }

    pub fn plot(&self) -> PathBuf {
        self.dir.join(format!("{}.plot.dat", self.stem))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

/// Header row from the field names of `T`, then one row per record.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| RunError::Format(e.to_string()))?;
    for row in rows {
        w.serialize(row).map_err(|e| RunError::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// Whitespace-separated columns with a `#` header, for gnuplot and friends.
pub fn write_plot(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), RunError> {
    let mut out = Vec::new();
    writeln!(out, "# {}", columns.join(" ")).expect("writing to memory");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(" ")).expect("writing to memory");
    }
    fs::write(path, out).map_err(|e| RunError::io(path, e))
}

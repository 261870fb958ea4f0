//! Reports and artifacts on disk.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use spectral_contour::report::Check;
use spectral_contour::tolerances::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub nodes: usize,
    pub seed: Option<u64>,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

/// Field order is part of the format.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub scene_digest: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub error: Option<String>,
    pub summary: serde_json::Value,
    pub environment: Environment,
    pub timing: Timing,
    pub tolerances: Tolerances,
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp: PathBuf = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Named file contents produced by a command.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self { name: name.into(), bytes }
    }
}

/// CSV rows of floats, 17 significant digits, under a header.
pub fn float_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

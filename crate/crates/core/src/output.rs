//! CSV artifacts with `#` metadata headers, and the run manifest that lists
//! every written file with its SHA-256 digest.
//!
//! Outputs are staged in memory and only written once a command has fully
//! succeeded, so a failing run leaves the output directory untouched.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// A CSV table under construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // shortest round-trip representation
            Cell::Num(v) if v.is_finite() => format!("{v:e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string().replace('\n', " ")));
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> &mut Self {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        self.rows.push(cells.iter().map(Cell::render).collect());
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Provenance record written next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub version: String,
    pub config: serde_json::Value,
    pub settings: serde_json::Value,
    pub threads: usize,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub outputs: Vec<OutputDigest>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Files produced by a command, held until the command succeeds.
#[derive(Debug, Default, Clone)]
pub struct Staged {
    files: Vec<(String, String)>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) {
        self.text(name, table.render());
    }

    pub fn text(&mut self, name: &str, contents: String) {
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), contents));
    }

    pub fn files(&self) -> &[(String, String)] {
        &self.files
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// Write every staged file into `dir`, returning their digests.
    pub fn write(&self, dir: &Path) -> Result<Vec<OutputDigest>> {
        std::fs::create_dir_all(dir)?;
        let mut digests = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
            digests.push(OutputDigest {
                file: name.clone(),
                sha256: sha256_hex(contents.as_bytes()),
                bytes: contents.len(),
            });
        }
        Ok(digests)
    }
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(manifest).map_err(|e| crate::Error::Config(e.to_string()))?;
    std::fs::write(&path, json + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.meta("units", "GHz").row(vec![1.5.into(), Cell::Missing]).row(vec![2usize.into(), "x,y".into()]);
        assert_eq!(t.render(), "# units: GHz\na,b\n1.5e0,\n2,\"x,y\"\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 6.02e23, 1e-300] {
            let s = Cell::Num(v).render();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

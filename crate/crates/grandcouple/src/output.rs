//! CSV tables and their JSON metadata sidecars.
//!
//! CSV files are comma-separated UTF-8 with LF line endings and a header
//! row. Floats use Rust's shortest round-trip formatting (exponent form
//! for very small or large magnitudes), so a fixed seed
//! gives byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Placeholder unless the build sets `GRANDCOUPLE_GIT_REV`.
pub const GIT_REVISION: &str = match option_env!("GRANDCOUPLE_GIT_REV") {
    Some(r) => r,
    None => "unknown",
};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    /// Index of a column by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

/// Shortest round-trip decimal; empty for NaN (not applicable).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct Sidecar {
    pub command: String,
    pub config_sha256: String,
    pub git_revision: String,
    pub version: String,
    pub seed: u64,
    pub replicates: usize,
    pub workers: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub rows: usize,
    pub censored: usize,
}

impl Sidecar {
    pub fn write(&self, csv_path: &Path) -> Result<PathBuf> {
        let path = sidecar_path(csv_path);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// `results/x.csv` → `results/x.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// `results/x.csv` → `results/x_<suffix>.csv`, for secondary tables.
pub fn companion_path(csv_path: &Path, suffix: &str) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}_{suffix}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![fmt_f64(0.1), fmt_f64(f64::NAN)]);
        t.push(vec!["x,y".into(), fmt_f64(1e-300)]);
        t.push(vec![fmt_f64(2.0), fmt_f64(f64::INFINITY)]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "a,b\n0.1,\n\"x,y\",1e-300\n2.0,inf\n");
    }

    #[test]
    fn paths() {
        let p = Path::new("out/meet.csv");
        assert_eq!(sidecar_path(p), Path::new("out/meet.meta.json"));
        assert_eq!(companion_path(p, "alpha"), Path::new("out/meet_alpha.csv"));
    }
}

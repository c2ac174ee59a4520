//! Artifact writers: CSV tables, JSON documents and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// One computed quantity set against a reference value.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub name: String,
    pub expected: Value,
    pub computed: Value,
    pub pass: bool,
}

impl Comparison {
    pub fn new(name: impl Into<String>, expected: impl Serialize, computed: impl Serialize, pass: bool) -> Self {
        Comparison {
            name: name.into(),
            expected: serde_json::to_value(expected).expect("serializable"),
            computed: serde_json::to_value(computed).expect("serializable"),
            pass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub config: RunConfig,
    pub tolerances: Value,
    pub seeds: Value,
    /// Results set against the published tables and statements.
    pub reference_comparisons: Vec<Comparison>,
    /// Internal consistency checks.
    pub checks: Vec<Comparison>,
    pub summary: Value,
    pub artifacts: Vec<String>,
    pub status: String,
    pub exit_code: i32,
}

/// Collects artifacts for one run directory.
pub struct Output {
    dir: PathBuf,
    pub artifacts: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> io::Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(path, text)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> io::Result<()> {
        fs::write(self.path(name), body)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Writes a numeric table; every value as `{:.16e}` (17 significant digits).
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
        let mut w = csv::Writer::from_path(self.path(name)).map_err(io::Error::other)?;
        w.write_record(header).map_err(io::Error::other)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io::Error::other)?;
        }
        w.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliResult;

/// Shortest round-trip decimal; identical inputs give identical bytes.
pub fn num(x: f64) -> String {
    // -0 and 0 are the same number; print one spelling
    if x == 0.0 {
        return "0".into();
    }
    format!("{x}")
}

/// Collects everything a run writes into one output directory.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Registers `name` and returns its full path (for plots).
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<R>(&mut self, name: &str, header: &[&str], rows: R) -> CliResult<()>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let path = self.file(name);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `manifest.json` and returns every path written, manifest last.
    pub fn finish(self, mut manifest: Manifest) -> CliResult<Vec<PathBuf>> {
        manifest.files = self.files.clone();
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        let mut all: Vec<PathBuf> = self.files.iter().map(|f| self.dir.join(f)).collect();
        all.push(path);
        Ok(all)
    }
}

#[derive(Debug, Serialize)]
pub struct Flags {
    pub plot: bool,
    pub critical_coupling: bool,
    pub output_field: bool,
}

/// Everything needed to reproduce a run: the config as given, the device
/// as resolved (after flags), the command settings in internal units.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub timestamp: String,
    pub config_path: String,
    pub config_text: String,
    pub flags: Flags,
    /// Device block in internal units, readable back as a config.
    pub resolved_device: String,
    pub settings: serde_json::Value,
    pub results: serde_json::Value,
    pub files: Vec<String>,
}

//! One `manifest.json` per run: what ran, on which data, with which seed, and
//! what it wrote. `riskcast rerun <manifest>` replays the recorded arguments.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use riskcast::data::{COVARIATES_FILE, SERIES_FILE};
use riskcast::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Arguments after the program name, enough to reproduce the run.
    pub args: Vec<String>,
    pub config_path: Option<PathBuf>,
    /// Content hash of the dataset read or written.
    pub dataset_id: Option<String>,
    pub seed: Option<u64>,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub status: String,
    pub error: Option<String>,
    #[serde(skip)]
    out_dir: Option<PathBuf>,
}

impl Manifest {
    pub fn start(args: &[String]) -> Self {
        Self {
            command: args.first().cloned().unwrap_or_default(),
            args: args.to_vec(),
            config_path: None,
            dataset_id: None,
            seed: None,
            started_at: Utc::now(),
            finished_at: None,
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            status: "running".into(),
            error: None,
            out_dir: None,
        }
    }

    /// Creates the output directory; the manifest is written there.
    pub fn set_out_dir(&mut self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.out_dir = Some(dir.to_path_buf());
        Ok(())
    }

    /// Path of an artifact in the output directory, recorded as an output.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let dir = self.out_dir.as_ref().expect("output directory set first");
        let path = dir.join(name);
        self.outputs.push(path.clone());
        path
    }

    pub fn finish(mut self, error: Option<&str>) -> Result<()> {
        let Some(dir) = self.out_dir.clone() else {
            return Ok(());
        };
        self.finished_at = Some(Utc::now());
        self.status = if error.is_some() { "failed" } else { "ok" }.into();
        self.error = error.map(str::to_string);
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).map_err(|e| Error::Serde(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
    }
}

/// First 16 hex digits of the SHA-256 of a bundle's series and covariates.
pub fn dataset_id(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in [SERIES_FILE, COVARIATES_FILE] {
        let path = dir.join(name);
        h.update(fs::read(&path).map_err(|e| Error::io(&path, e))?);
    }
    Ok(format!("{:x}", h.finalize())[..16].to_string())
}

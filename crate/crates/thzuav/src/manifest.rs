//! Run manifest: written when a command starts, finalized with output
//! digests when it ends.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub status: String,
    pub seeds: serde_json::Value,
    pub config: String,
    pub config_si: serde_json::Value,
    pub started_unix_s: f64,
    pub wall_seconds: Option<f64>,
    pub outputs: Vec<OutputDigest>,
    #[serde(skip)]
    dir: PathBuf,
    #[serde(skip)]
    clock: Option<Instant>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    /// Writes the initial manifest into `dir` (which must exist).
    pub fn begin(command: &str, cfg: &RunConfig, seeds: serde_json::Value, dir: &Path) -> Result<Self, CliError> {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let m = Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            status: "running".into(),
            seeds,
            config: cfg.to_flat_string(),
            config_si: cfg.si_echo()?,
            started_unix_s: started,
            wall_seconds: None,
            outputs: Vec::new(),
            dir: dir.to_path_buf(),
            clock: Some(Instant::now()),
        };
        m.save()?;
        Ok(m)
    }

    /// Records an output written under the run directory.
    pub fn record(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.push(OutputDigest {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }

    /// Writes `bytes` to `dir/name` and records its digest.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display(), e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(path.display(), e))?;
        self.record(name, bytes);
        Ok(())
    }

    pub fn finish(mut self) -> Result<Self, CliError> {
        self.status = "complete".into();
        self.wall_seconds = self.clock.map(|c| c.elapsed().as_secs_f64());
        self.save()?;
        Ok(self)
    }

    fn save(&self) -> Result<(), CliError> {
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::io("manifest", e))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(path.display(), e))
    }
}

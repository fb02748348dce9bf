use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{CliResult, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one invocation: enough to rerun it and get the same outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize) -> CliResult<Self> {
        Ok(Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: serde_json::to_value(config).map_err(|e| Failure::config(e.to_string()))?,
            inputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        })
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Records the sha256 of each file; directories are walked in name order.
    pub fn input(&mut self, path: &Path) -> CliResult {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| io_failure(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            entries.sort();
            for p in entries {
                self.input(&p)?;
            }
            return Ok(());
        }
        let bytes = std::fs::read(path).map_err(|e| io_failure(path, e))?;
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Failure::config(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_failure(&path, e))?;
        Ok(path)
    }
}

pub fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: crate::failure::EXIT_OTHER,
        message: format!("{}: {e}", path.display()),
    }
}

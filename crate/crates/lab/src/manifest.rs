//! Run manifests: everything needed to repeat a command and check that
//! the repeat produced the same bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::LabConfig;
use crate::error::LabError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory for outputs; as given for inputs.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    pub fn of(path: &Path, recorded_as: String) -> Result<Self, LabError> {
        let data = fs::read(path).map_err(|e| LabError::io(path, e))?;
        Ok(Self {
            path: recorded_as,
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the canonical effective config.
    pub config_hash: String,
    pub master_seed: u64,
    pub config: LabConfig,
    pub inputs: Vec<FileEntry>,
    pub files: Vec<FileEntry>,
    pub step_count: usize,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), LabError> {
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text).map_err(|e| LabError::io(&path, e))
    }

    /// Reads `path`, or `path/manifest.json` when `path` is a directory.
    pub fn read(path: &Path) -> Result<Self, LabError> {
        let file = if path.is_dir() {
            path.join(MANIFEST_NAME)
        } else {
            path.to_path_buf()
        };
        let text = fs::read_to_string(&file).map_err(|e| LabError::io(&file, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::Format(format!("{}: {e}", file.display())))
    }

    /// Checks every listed output under `dir` against its checksum.
    pub fn verify_outputs(&self, dir: &Path) -> Result<Vec<String>, LabError> {
        let mut mismatched = Vec::new();
        for f in &self.files {
            let actual = FileEntry::of(&dir.join(&f.path), f.path.clone())?;
            if actual != *f {
                mismatched.push(f.path.clone());
            }
        }
        Ok(mismatched)
    }

    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == name)
    }
}

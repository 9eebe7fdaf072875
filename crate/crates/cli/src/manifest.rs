//! Deterministic run manifests: resolved settings plus a SHA-256 digest of
//! every artifact. Identical command + seed must produce byte-identical
//! manifests, so no timestamps or absolute paths appear here.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub settings: BTreeMap<String, String>,
    pub seed: u64,
    pub config_sha256: String,
    pub version: String,
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_bytes: Option<&[u8]>) -> Self {
        Self {
            command: command.to_string(),
            settings: BTreeMap::new(),
            seed,
            config_sha256: config_bytes.map_or_else(|| "default".to_string(), hex_sha256),
            version: env!("CARGO_PKG_VERSION").to_string(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.settings.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Artifact writer rooted at the output directory; records a digest per file
/// and finishes by writing `manifest.json`.
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path, manifest: Manifest) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.manifest
            .artifacts
            .insert(name.to_string(), hex_sha256(bytes));
        Ok(path)
    }

    /// Write `manifest.json` including digests of all recorded artifacts.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let path = self.root.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        fs::write(&path, json.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{SimError, SimResult};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// A simulation error stopped the run; listed artifacts are partial.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub code_version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    /// Sorted by path.
    pub artifacts: Vec<ArtifactEntry>,
}

/// Writes artifacts into one directory and remembers each file written.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Mutex<Vec<String>>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> SimResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| SimError::io(&root, e))?;
        Ok(Self { root, written: Mutex::new(Vec::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write `bytes` to `name` and record it.
    pub fn write(&self, name: &str, bytes: &[u8]) -> SimResult<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| SimError::io(&path, e))?;
        let mut w = self.written.lock().expect("artifact log poisoned");
        if !w.iter().any(|n| n == name) {
            w.push(name.to_string());
        }
        Ok(path)
    }

    pub fn written(&self) -> Vec<String> {
        let mut w = self.written.lock().expect("artifact log poisoned").clone();
        w.sort();
        w
    }

    /// Hash every recorded artifact and write the manifest.
    pub fn finish(&self, config: &ExperimentConfig, error: Option<&SimError>) -> SimResult<Manifest> {
        let mut artifacts = Vec::new();
        for name in self.written() {
            let path = self.path(&name);
            let bytes = fs::read(&path).map_err(|e| SimError::io(&path, e))?;
            artifacts.push(ArtifactEntry { path: name, sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        }
        let manifest = Manifest {
            kind: config.kind.name().to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            status: if error.is_some() { RunStatus::Partial } else { RunStatus::Complete },
            error: error.map(|e| e.to_string()),
            config: config.canonical(),
            artifacts,
        };
        let text = crate::formats::to_json(&manifest)?;
        let path = self.path(MANIFEST_NAME);
        fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn read_manifest(path: &Path) -> SimResult<Manifest> {
    crate::formats::read_json(path)
}

/// Entries whose file is missing or whose hash no longer matches.
pub fn verify(dir: &Path, manifest: &Manifest) -> Vec<String> {
    manifest
        .artifacts
        .iter()
        .filter(|a| fs::read(dir.join(&a.path)).map_or(true, |b| sha256_hex(&b) != a.sha256))
        .map(|a| a.path.clone())
        .collect()
}

//! Run manifests: settings, seeds and digests of every file read or written.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl FileDigest {
    /// Digest of `path`, recorded relative to `base` when it lies inside it.
    pub fn of(path: &Path, base: Option<&Path>) -> anyhow::Result<Self> {
        let shown = base
            .and_then(|b| path.strip_prefix(b).ok())
            .unwrap_or(path);
        Ok(Self {
            path: shown.to_string_lossy().replace('\\', "/"),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub data: Option<u64>,
    pub training: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// `epochs=.. batch=.. lr=..` for commands that train.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training: Option<String>,
    pub seeds: Seeds,
    pub settings: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &'static str, seeds: Seeds, settings: Value) -> Self {
        Self {
            tool: "aldsat",
            version: env!("CARGO_PKG_VERSION"),
            command,
            training: None,
            seeds,
            settings,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// `<file>.manifest.json` beside an output file.
pub fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

//! Run manifests: the resolved config, the input it read, and a checksum of
//! every artifact written. Re-running with the manifest as `--config`
//! reproduces the artifacts byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{io_at, CliError};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub input: Option<PathBuf>,
    pub artifacts: Vec<Artifact>,
    pub results: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn artifact(root: &Path, path: &Path) -> Result<Artifact, CliError> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    Ok(Artifact {
        path: rel.join("/"),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Writes `root/manifest.json` covering `files`.
pub fn write(
    root: &Path,
    command: &str,
    config: &ExperimentConfig,
    input: Option<&Path>,
    files: &[PathBuf],
    results: serde_json::Value,
) -> Result<PathBuf, CliError> {
    let mut artifacts = files.iter().map(|f| artifact(root, f)).collect::<Result<Vec<_>, _>>()?;
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    artifacts.dedup_by(|a, b| a.path == b.path);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: config.clone(),
        input: input.map(Path::to_path_buf),
        artifacts,
        results,
    };
    let path = root.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_at(&path))?;
    Ok(path)
}

pub fn read(path: &Path) -> Result<RunManifest, CliError> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Recomputes every checksum; returns the paths that no longer match.
pub fn verify(root: &Path) -> Result<Vec<String>, CliError> {
    let manifest = read(&root.join(MANIFEST_NAME))?;
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        let path = root.join(&a.path);
        match fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
            _ => bad.push(a.path.clone()),
        }
    }
    Ok(bad)
}

//! Run manifest: what was run, by which code, and a checksum for every file
//! the run produced.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SimError;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config_sha256: String,
    pub code_version: String,
    /// Wall-clock start and end, seconds since the Unix epoch.
    pub start_time: f64,
    pub end_time: f64,
    pub steps_completed: u64,
    pub status: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<(String, u64), SimError> {
    let bytes = fs::read(path).map_err(|e| SimError::io(path, e))?;
    Ok((sha256_hex(&bytes), bytes.len() as u64))
}

/// Checksums every regular file in `dir` except the manifest itself, sorted
/// by name.
pub fn collect_artifacts(dir: &Path) -> Result<Vec<Artifact>, SimError> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| SimError::io(dir, e))? {
        let entry = entry.map_err(|e| SimError::io(dir, e))?;
        let ft = entry.file_type().map_err(|e| SimError::io(entry.path(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if ft.is_file() && name != MANIFEST_NAME {
            names.push(name);
        }
    }
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let (sha256, bytes) = file_sha256(&dir.join(&name))?;
            Ok(Artifact { path: name, sha256, bytes })
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), SimError> {
    let path = dir.join(MANIFEST_NAME);
    let text = toml::to_string(manifest).map_err(|e| SimError::format(&path, e.to_string()))?;
    fs::write(&path, text).map_err(|e| SimError::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, SimError> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
    toml::from_str(&text).map_err(|e| SimError::format(&path, e.to_string()))
}

/// Confirms that the manifest lists exactly the files present in `dir` and
/// that every checksum still matches.
pub fn verify_manifest(dir: &Path) -> Result<(), SimError> {
    let manifest = read_manifest(dir)?;
    let present = collect_artifacts(dir)?;
    if present != manifest.artifacts {
        let listed: Vec<&str> = manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
        for a in &present {
            match manifest.artifacts.iter().find(|m| m.path == a.path) {
                None => return Err(SimError::format(dir.join(&a.path), "not listed in the manifest")),
                Some(m) if m != a => return Err(SimError::format(dir.join(&a.path), "checksum mismatch")),
                _ => {}
            }
        }
        return Err(SimError::format(dir, format!("manifest lists missing files among {listed:?}")));
    }
    Ok(())
}

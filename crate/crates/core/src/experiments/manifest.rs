use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::error::Result;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub velocity: u64,
    pub trajectory: Option<u64>,
}

/// Provenance of one run: what was asked, with which seeds, and what came
/// out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario_hash: String,
    pub tool_version: String,
    pub seeds: Seeds,
    pub steps: usize,
    pub dt: f64,
    pub files: Vec<FileEntry>,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the resolved scenario together with the command that runs it.
pub fn scenario_hash(command: &str, config: &ScenarioConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(config.to_toml_string().as_bytes());
    hex::encode(h.finalize())
}

pub fn file_entry(dir: &Path, rel: &str) -> Result<FileEntry> {
    let bytes = fs::read(dir.join(rel))?;
    Ok(FileEntry {
        path: rel.to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hash_depends_on_command_and_config() {
        let text = "[velocity]\nkind = \"uniform\"\ncenterline_speed = 18.0\n";
        let a = ScenarioConfig::from_toml_str(text).unwrap();
        let b = a.clone().with_seed(3);
        assert_eq!(scenario_hash("forward", &a), scenario_hash("forward", &a));
        assert_ne!(scenario_hash("forward", &a), scenario_hash("estimate", &a));
        assert_ne!(scenario_hash("forward", &a), scenario_hash("forward", &b));
    }
}

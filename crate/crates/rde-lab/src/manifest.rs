use std::path::Path;
use std::process::Command;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub git_revision: String,
    pub wall_time_s: f64,
    pub threads: usize,
    pub invalid_orbits: u64,
    pub files: Vec<FileEntry>,
}

pub fn file_entry(name: &str, content: &[u8]) -> FileEntry {
    FileEntry { name: name.to_string(), bytes: content.len(), sha256: hex::encode(Sha256::digest(content)) }
}

/// `git rev-parse HEAD` in `dir`, or "unknown" outside a repository.
pub fn git_revision(dir: &Path) -> String {
    Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

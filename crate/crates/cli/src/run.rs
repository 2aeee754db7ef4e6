//! Run directories: `<root>/<run-id>/{manifest.json, config.json, reports/, data/}`.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub config_hash: String,
    pub artifact_version: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Every emitted file except the manifest itself, in write order.
    pub files: Vec<FileEntry>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub struct RunDir {
    root: PathBuf,
    run_id: String,
    command: String,
    config_hash: String,
    started: u64,
    files: Vec<FileEntry>,
}

impl RunDir {
    /// Creates a fresh directory for `cfg` under its output root, replacing a
    /// previous run with the same id, and writes `config.json`.
    pub fn create(cfg: &RunConfig, command: &str) -> Result<Self> {
        let run_id = cfg.run_id(command);
        let root = cfg.output_root().join(&run_id);
        if root.exists() {
            std::fs::remove_dir_all(&root)
                .with_context(|| format!("clearing {}", root.display()))?;
        }
        std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        let mut dir = Self {
            root,
            run_id,
            command: command.to_string(),
            config_hash: cfg.hash(),
            started: now_ms(),
            files: Vec::new(),
        };
        let mut text = serde_json::to_string_pretty(cfg)?;
        text.push('\n');
        dir.write("config.json", text.as_bytes())?;
        Ok(dir)
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes `manifest.json`; `error` marks the run as failed.
    pub fn finish(self, error: Option<String>) -> Result<RunManifest> {
        let manifest = RunManifest {
            run_id: self.run_id,
            command: self.command,
            config_hash: self.config_hash,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            status: if error.is_some() { "failed" } else { "ok" }.to_string(),
            error,
            files: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.root.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

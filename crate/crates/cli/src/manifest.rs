//! Run manifests: every invocation records its configuration, inputs and
//! outputs with content hashes so each emitted number is traceable.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    /// Module and parameters that produced the file.
    pub produced_by: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub config: serde_json::Value,
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<OutputEntry>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub fitted_constants: serde_json::Value,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct ManifestBuilder {
    command: String,
    started_at: String,
    config: serde_json::Value,
    input_hashes: BTreeMap<String, String>,
    outputs: Vec<OutputEntry>,
    fitted_constants: serde_json::Value,
    warnings: Vec<String>,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: serde_json::Value, out_dir: &Path) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            started_at: chrono::Utc::now().to_rfc3339(),
            config,
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
            fitted_constants: serde_json::Value::Null,
            warnings: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn record_input(&mut self, name: &str, bytes: &[u8]) {
        self.input_hashes.insert(name.to_string(), sha256_hex(bytes));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn set_fitted(&mut self, v: serde_json::Value) {
        self.fitted_constants = v;
    }

    /// Write a payload file into the run directory and record its hash.
    pub fn emit(&mut self, name: &str, produced_by: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            produced_by: produced_by.to_string(),
        });
        Ok(path)
    }

    pub fn finish(self) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            config: self.config,
            input_hashes: self.input_hashes,
            outputs: self.outputs,
            fitted_constants: self.fitted_constants,
            warnings: self.warnings,
        };
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(path)
    }
}

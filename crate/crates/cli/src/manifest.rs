use std::path::{Path, PathBuf};

use anyhow::Context;
use instanton_core::ParityCheckCode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to rerun a command: the exact argument list, the
/// resolved configuration and the identity of the code it ran on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub code_id: Option<String>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, code: Option<&ParityCheckCode>, seed: Option<u64>, workers: usize, config: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: std::env::args().collect(),
            code_id: code.map(code_id),
            seed,
            workers,
            config,
        }
    }

    /// Writes the manifest next to a non-JSON output file.
    pub fn write_beside(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// SHA-256 of the canonical alist serialization.
pub fn code_id(code: &ParityCheckCode) -> String {
    hex::encode(Sha256::digest(code.to_alist().as_bytes()))
}

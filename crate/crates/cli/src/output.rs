use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

/// Files written by one stage, in write order.
pub struct Artifacts {
    root: PathBuf,
    stage: &'static str,
    pub list: Vec<Artifact>,
}

impl Artifacts {
    pub fn new(root: &Path, stage: &'static str) -> Self {
        Self {
            root: root.to_path_buf(),
            stage,
            list: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let rel = format!("{}/{name}", self.stage);
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)
            .map_err(|e| CliError::internal(format!("writing {}: {e}", path.display())))?;
        self.list.push(Artifact {
            path: rel,
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Buffers the output of a library writer and stores it.
    pub fn with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> newsflow::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, &pretty(value)?)
    }

    /// Writes `summary.json` with the provenance fields and artifact list.
    pub fn finish<B: Serialize>(self, config_hash: &str, body: &B) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Envelope<'a, B> {
            tool_version: &'a str,
            config_hash: &'a str,
            stage: &'a str,
            #[serde(flatten)]
            body: &'a B,
            artifacts: &'a [Artifact],
        }
        let env = Envelope {
            tool_version: TOOL_VERSION,
            config_hash,
            stage: self.stage,
            body,
            artifacts: &self.list,
        };
        let path = self.root.join(self.stage).join("summary.json");
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, pretty(&env)?)?;
        Ok(path)
    }
}

pub fn pretty<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// File-name-safe form of a label.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

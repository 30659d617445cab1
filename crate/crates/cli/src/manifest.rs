//! Run manifest and content-addressed stage caching.
//!
//! Every stage has a key: the hash of its name, its parameters and the
//! output hashes of the stages it reads. A stage whose recorded key matches
//! and whose outputs are still on disk with the recorded hashes is a cache
//! hit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub key: String,
    /// Upstream stage names.
    pub inputs: Vec<String>,
    /// Path relative to the run directory -> sha256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

impl StageRecord {
    /// Single hash over all outputs, used in downstream keys.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(&self.outputs).expect("map serializes").as_bytes())
    }
}

impl Manifest {
    pub fn load_or_default(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| CliError::Artifact(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&root.join(MANIFEST_FILE), text.as_bytes())
    }

    pub fn require(&self, stage: &str) -> Result<&StageRecord> {
        self.stages.get(stage).ok_or_else(|| CliError::Dependency {
            stage: stage.to_string(),
            detail: format!("run the stage that produces {stage:?} first"),
        })
    }
}

/// Files produced by one stage run.
#[derive(Debug)]
pub struct Outputs {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl Outputs {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf(), files: BTreeMap::new() }
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(rel), bytes)?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn into_files(self) -> BTreeMap<String, String> {
        self.files
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// True when every recorded output exists with its recorded hash.
pub fn outputs_intact(root: &Path, record: &StageRecord) -> bool {
    record
        .outputs
        .iter()
        .all(|(rel, hash)| std::fs::read(root.join(rel)).map_or(false, |b| &sha256_hex(&b) == hash))
}

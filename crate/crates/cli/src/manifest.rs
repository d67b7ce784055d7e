//! Run manifests.
//!
//! A stage's run id is the first 16 hex digits of the SHA-256 of
//! `{format, software, stage, config, inputs: [[role, sha256], ...]}`
//! serialized as JSON. Paths and timings are deliberately left out, so the
//! same inputs and settings give the same id wherever the files live, and a
//! pipeline run shares its stage ids with the equivalent subcommands.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Bumped whenever an output column or JSON key changes.
pub const MANIFEST_FORMAT: u32 = 1;
pub const SOFTWARE: &str = concat!("zombierank ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

impl InputRecord {
    pub fn digest(role: &str, path: &Path) -> Result<Self> {
        Ok(InputRecord { role: role.to_string(), path: path.to_path_buf(), sha256: file_sha256(path)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub format: u32,
    pub software: String,
    pub stage: String,
    pub run_id: String,
    pub inputs: Vec<InputRecord>,
    pub config: Value,
    pub outputs: Vec<PathBuf>,
    pub elapsed_ms: f64,
    pub summary: Value,
}

impl StageManifest {
    /// Starts a manifest; outputs, timing and summary are filled in later.
    pub fn new(stage: &str, inputs: Vec<InputRecord>, config: Value) -> Self {
        let run_id = run_id(stage, &inputs, &config);
        StageManifest {
            format: MANIFEST_FORMAT,
            software: SOFTWARE.to_string(),
            stage: stage.to_string(),
            run_id,
            inputs,
            config,
            outputs: Vec::new(),
            elapsed_ms: 0.0,
            summary: Value::Null,
        }
    }
}

pub fn run_id(stage: &str, inputs: &[InputRecord], config: &Value) -> String {
    let identity = json!({
        "format": MANIFEST_FORMAT,
        "software": SOFTWARE,
        "stage": stage,
        "config": config,
        "inputs": inputs.iter().map(|i| [&i.role, &i.sha256]).collect::<Vec<_>>(),
    });
    short_hash(identity.to_string().as_bytes())
}

pub(crate) fn short_hash(bytes: &[u8]) -> String {
    let digest = format!("{:x}", Sha256::digest(bytes));
    digest[..16].to_string()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(CliError::io(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let read = file.read(&mut buf).map_err(CliError::io(path))?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

pub fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("configuration types serialize to JSON")
}

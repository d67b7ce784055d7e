//! CSV and JSON file contracts.
//!
//! Every CSV starts with a `# manifest: <run id>` line, then a header row.
//! Readers skip lines starting with `#`. `node_id` is always the dense node
//! id, i.e. the 0-based line of the account in the uid list.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use zombierank_core::{Label, NodeId};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub node_id: NodeId,
    pub community_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub node_id: NodeId,
    pub community_id: u32,
    pub io: f64,
    pub pagerank: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub node_id: NodeId,
    pub community_id: u32,
    pub pagerank: f64,
    /// Empty for communities below the minimum size.
    pub threshold: Option<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lower: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub region: String,
    pub count: usize,
}

/// The columns of `truth.csv` that evaluation needs; others are ignored.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TruthRow {
    pub node_id: NodeId,
    pub is_zombie: String,
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place, so a failure never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(path))?;
    tmp.write_all(bytes).map_err(CliError::io(path))?;
    tmp.as_file().sync_all().map_err(CliError::io(path))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        // Temporary files are created owner-only; outputs should not be.
        std::fs::set_permissions(tmp.path(), std::fs::Permissions::from_mode(0o644)).map_err(CliError::io(path))?;
    }
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn csv_bytes<T: Serialize>(run_id: &str, rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = format!("# manifest: {run_id}\n").into_bytes();
    {
        let mut csv = csv::Writer::from_writer(&mut out);
        for row in rows {
            csv.serialize(row).expect("in-memory CSV rows serialize");
        }
        csv.flush().expect("in-memory writes cannot fail");
    }
    out
}

pub fn write_csv<T: Serialize>(path: &Path, run_id: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
    write_atomic(path, &csv_bytes(run_id, rows))
}

/// Serializes the fields of `value` plus a `"manifest"` key.
pub fn write_json<T: Serialize>(path: &Path, run_id: &str, value: &T) -> Result<()> {
    let mut object = serde_json::Map::new();
    object.insert("manifest".into(), run_id.into());
    match serde_json::to_value(value).expect("outputs serialize to JSON") {
        serde_json::Value::Object(fields) => object.extend(fields),
        other => {
            object.insert("value".into(), other);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&object).expect("JSON values serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    csv.deserialize().collect::<Result<_, _>>().map_err(CliError::csv(path))
}

//! `pipeline`: convert → communities → rank → detect (→ evaluate), through
//! files in the output directory, plus a manifest that can be replayed.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use zombierank_core::synth::{NETWORK_FILE, PROFILE_FILE, TRUTH_FILE, UIDLIST_FILE};
use zombierank_core::{DetectConfig, IoSource, LouvainConfig, RankConfig};

use crate::error::{CliError, Result};
use crate::manifest::{file_sha256, short_hash, StageManifest, MANIFEST_FORMAT, SOFTWARE};
use crate::stages::{self, OutputGuard, ProfileFiles, RegionRequest};

pub const CACHE_FILE: &str = "graph.cache";
pub const PARTITION_FILE: &str = "partition.csv";
pub const RANKS_FILE: &str = "ranks.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const REGIONS_FILE: &str = "regions.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Optional profile schema looked up in an input directory.
pub const SCHEMA_FILE: &str = "profile_schema.json";

/// Everything a pipeline run depends on. Input paths are absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub network: PathBuf,
    pub uids: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub profile_schema: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub louvain: LouvainConfig,
    pub rank: RankConfig,
    pub io_source: IoSource,
    pub detect: DetectConfig,
    pub transpose: bool,
}

impl PipelineConfig {
    fn profile_files(&self) -> Option<ProfileFiles> {
        self.profiles.as_ref().map(|profiles| ProfileFiles {
            profiles: profiles.clone(),
            uids: self.uids.clone(),
            schema: self.profile_schema.clone(),
        })
    }
}

/// Explicitly given input files; `None` fields are looked up in the input
/// directory when the main input is one.
#[derive(Debug, Clone, Default)]
pub struct InputOverrides {
    pub uids: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub profile_schema: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).map_err(CliError::io(path))
}

/// Resolves `input` (a network file or a corpus directory) into absolute
/// input paths.
pub fn resolve_inputs(input: &Path, overrides: InputOverrides) -> Result<(PathBuf, InputOverrides)> {
    let in_dir = |name: &str| -> Option<PathBuf> {
        let candidate = input.join(name);
        (input.is_dir() && candidate.is_file()).then_some(candidate)
    };
    let network = if input.is_dir() { input.join(NETWORK_FILE) } else { input.to_path_buf() };
    let pick = |given: Option<PathBuf>, name: &str| -> Result<Option<PathBuf>> {
        given.or_else(|| in_dir(name)).map(|p| absolute(&p)).transpose()
    };
    Ok((
        absolute(&network)?,
        InputOverrides {
            uids: pick(overrides.uids, UIDLIST_FILE)?,
            profiles: pick(overrides.profiles, PROFILE_FILE)?,
            profile_schema: pick(overrides.profile_schema, SCHEMA_FILE)?,
            truth: pick(overrides.truth, TRUTH_FILE)?,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub format: u32,
    pub software: String,
    /// Hash of the stage run ids, in order.
    pub run_id: String,
    pub config: PipelineConfig,
    pub stages: Vec<StageManifest>,
    pub summary: Value,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub manifest: PipelineManifest,
    pub lines: Vec<String>,
    pub nonconverged: usize,
}

pub fn run(cfg: &PipelineConfig, out_dir: &Path) -> Result<PipelineOutcome> {
    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    let path = |name: &str| out_dir.join(name);
    let mut guard = OutputGuard::default();
    let mut stages = Vec::new();
    let mut lines = Vec::new();
    let mut record = |outcome: stages::StageOutcome, stages: &mut Vec<StageManifest>| {
        lines.push(format!("[{}] {}", outcome.manifest.stage, outcome.manifest.run_id));
        lines.extend(outcome.lines.into_iter().map(|l| format!("  {l}")));
        stages.push(outcome.manifest);
        outcome.nonconverged
    };

    for name in [CACHE_FILE, PARTITION_FILE, RANKS_FILE, REPORT_FILE, SUMMARY_FILE] {
        guard.track(&path(name));
    }
    record(stages::convert(&cfg.network, &path(CACHE_FILE))?, &mut stages);
    record(stages::communities(&path(CACHE_FILE), &cfg.louvain, &path(PARTITION_FILE))?, &mut stages);
    let profiles = cfg.profile_files();
    let nonconverged = record(
        stages::rank(
            &path(CACHE_FILE),
            &path(PARTITION_FILE),
            &cfg.rank,
            cfg.io_source,
            profiles.as_ref(),
            &path(RANKS_FILE),
        )?,
        &mut stages,
    );
    record(
        stages::detect(&path(RANKS_FILE), &cfg.detect, &path(REPORT_FILE), &path(SUMMARY_FILE))?,
        &mut stages,
    );
    if let Some(truth) = &cfg.truth {
        let regions = profiles.map(|profiles| RegionRequest { profiles, out: path(REGIONS_FILE) });
        guard.track(&path(METRICS_FILE));
        if let Some(r) = &regions {
            guard.track(&r.out);
        }
        record(
            stages::evaluate(&path(REPORT_FILE), truth, cfg.transpose, regions.as_ref(), &path(METRICS_FILE))?,
            &mut stages,
        );
    }

    let ids: Vec<&str> = stages.iter().map(|s| s.run_id.as_str()).collect();
    let run_id = short_hash(ids.join(",").as_bytes());
    let stage_summary = |name: &str| stages.iter().find(|s| s.stage == name).map(|s| s.summary.clone());
    let summary = json!({
        "communities": stage_summary("communities"),
        "detection": stage_summary("detect"),
        "evaluation": stage_summary("evaluate"),
        "nonconverged": nonconverged,
    });
    let manifest =
        PipelineManifest { format: MANIFEST_FORMAT, software: SOFTWARE.to_string(), run_id, config: cfg.clone(), stages, summary };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifests serialize");
    bytes.push(b'\n');
    guard.track(&path(MANIFEST_FILE));
    crate::tables::write_atomic(&path(MANIFEST_FILE), &bytes)?;
    guard.disarm();
    lines.push(format!("manifest: {} ({})", manifest.run_id, path(MANIFEST_FILE).display()));
    Ok(PipelineOutcome { manifest, lines, nonconverged })
}

/// Loads a pipeline manifest and checks that its external inputs still have
/// the recorded digests.
pub fn load_for_replay(path: &Path) -> Result<PipelineConfig> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let manifest: PipelineManifest =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::input(path, e))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(CliError::input(path, format!("manifest format {} is not supported", manifest.format)));
    }
    const EXTERNAL: [&str; 5] = ["network", "uids", "profiles", "profile_schema", "truth"];
    for stage in &manifest.stages {
        for input in stage.inputs.iter().filter(|i| EXTERNAL.contains(&i.role.as_str())) {
            let actual = file_sha256(&input.path)?;
            if actual != input.sha256 {
                return Err(CliError::input(
                    &input.path,
                    format!("content changed since the manifest was written (sha256 {actual}, recorded {})", input.sha256),
                ));
            }
        }
    }
    Ok(manifest.config)
}

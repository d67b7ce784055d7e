//! One function per pipeline stage. Each reads its inputs from files, writes
//! its outputs atomically and returns a manifest plus the lines to print.
//! `pipeline` chains the same functions through files, which is what makes
//! its outputs identical to running the subcommands by hand.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use zombierank_core::community::{modularity, ModularityVariant};
use zombierank_core::detect::CommunityValues;
use zombierank_core::evaluate::{degree_histogram, region_distribution};
use zombierank_core::ingest::{
    follow_counts, parse_profiles, parse_uidlist, parse_weibo_network, read_cache, write_cache, ProfileSchema,
    UserProfile,
};
use zombierank_core::synth::{self, SynthConfig};
use zombierank_core::{
    confusion, detect_zombies, louvain, metrics, rank_all_communities, symmetrize, DetectConfig, DirectedGraph,
    IoSource, Label, LouvainConfig, NodeId, Partition, RankConfig,
};

use crate::error::{CliError, Result};
use crate::manifest::{to_value, InputRecord, StageManifest};
use crate::tables::{
    read_csv, write_atomic, write_csv, write_json, HistogramRow, PartitionRow, RankRow, RegionRow, ReportRow, TruthRow,
};

#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub manifest: StageManifest,
    pub lines: Vec<String>,
    /// Communities whose PageRank hit the iteration cap.
    pub nonconverged: usize,
}

/// Profile files and how to read them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileFiles {
    pub profiles: PathBuf,
    /// Maps profile uids to dense ids; without it record `i` is node `i`.
    pub uids: Option<PathBuf>,
    /// JSON `ProfileSchema`; the default schema when absent.
    pub schema: Option<PathBuf>,
}

impl ProfileFiles {
    fn inputs(&self) -> Result<Vec<InputRecord>> {
        let mut inputs = vec![InputRecord::digest("profiles", &self.profiles)?];
        if let Some(uids) = &self.uids {
            inputs.push(InputRecord::digest("uids", uids)?);
        }
        if let Some(schema) = &self.schema {
            inputs.push(InputRecord::digest("profile_schema", schema)?);
        }
        Ok(inputs)
    }

    fn load(&self, node_count: usize) -> Result<Vec<UserProfile>> {
        let schema = match &self.schema {
            Some(path) => {
                let file = File::open(path).map_err(CliError::io(path))?;
                serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::input(path, e))?
            }
            None => ProfileSchema::default(),
        };
        let uids = match &self.uids {
            Some(path) => {
                let file = File::open(path).map_err(CliError::io(path))?;
                let uids = parse_uidlist(BufReader::new(file)).map_err(CliError::ingest(path))?;
                if uids.len() != node_count {
                    return Err(CliError::input(path, format!("{} uids for {node_count} nodes", uids.len())));
                }
                Some(uids)
            }
            None => None,
        };
        let file = File::open(&self.profiles).map_err(CliError::io(&self.profiles))?;
        let (profiles, _) =
            parse_profiles(BufReader::new(file), &schema, uids.as_deref()).map_err(CliError::ingest(&self.profiles))?;
        if let Some(p) = profiles.iter().find(|p| p.node as usize >= node_count) {
            return Err(CliError::input(&self.profiles, format!("profile for node {} but the graph has {node_count}", p.node)));
        }
        Ok(profiles)
    }
}

/// Removes the files it tracks when dropped, unless disarmed.
#[derive(Debug, Default)]
pub(crate) struct OutputGuard {
    paths: Vec<PathBuf>,
}

impl OutputGuard {
    pub(crate) fn track(&mut self, path: &Path) {
        self.paths.push(path.to_path_buf());
    }

    pub(crate) fn disarm(mut self) {
        self.paths.clear();
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        for path in &self.paths {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn finish(mut manifest: StageManifest, started: Instant, outputs: &[&Path], summary: Value) -> StageManifest {
    manifest.outputs = outputs.iter().map(|p| p.to_path_buf()).collect();
    manifest.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    manifest.summary = summary;
    manifest
}

pub fn load_graph(path: &Path) -> Result<DirectedGraph> {
    let file = File::open(path).map_err(CliError::io(path))?;
    read_cache(BufReader::new(file)).map_err(CliError::cache(path))
}

pub fn convert(network: &Path, cache: &Path) -> Result<StageOutcome> {
    let started = Instant::now();
    let manifest = StageManifest::new("convert", vec![InputRecord::digest("network", network)?], json!({}));
    let file = File::open(network).map_err(CliError::io(network))?;
    let (raw, stats) = parse_weibo_network(BufReader::new(file)).map_err(CliError::ingest(network))?;
    let (graph, build) = raw.to_graph().map_err(CliError::ingest(network))?;
    let mut bytes = Vec::new();
    write_cache(&graph, &mut bytes).expect("in-memory cache writes cannot fail");
    write_atomic(cache, &bytes)?;

    let lines = vec![
        format!("nodes: {}", raw.declared_nodes),
        format!("declared relationships: {}", raw.declared_relationships),
        format!("parsed arcs: {}", stats.parsed_arcs),
        format!(
            "graph arcs: {} ({} self-loop(s), {} duplicate(s) dropped)",
            graph.edge_count(),
            build.self_loops,
            build.duplicates
        ),
    ];
    if stats.relationship_mismatch {
        log::warn!(
            "header declares {} relationships but {} arcs were parsed",
            raw.declared_relationships,
            stats.parsed_arcs
        );
    }
    let summary = json!({
        "nodes": raw.declared_nodes,
        "declared_relationships": raw.declared_relationships,
        "parsed_arcs": stats.parsed_arcs,
        "graph_arcs": graph.edge_count(),
        "self_loops": build.self_loops,
        "duplicates": build.duplicates,
    });
    Ok(StageOutcome { manifest: finish(manifest, started, &[cache], summary), lines, nonconverged: 0 })
}

pub fn stats(cache: &Path, bin_width: u64, out: Option<&Path>) -> Result<StageOutcome> {
    let started = Instant::now();
    let manifest =
        StageManifest::new("stats", vec![InputRecord::digest("cache", cache)?], json!({ "bin_width": bin_width }));
    let graph = load_graph(cache)?;
    let histogram = degree_histogram(&graph, bin_width).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mutual = graph.arcs().filter(|&(u, v)| u < v && graph.has_arc(v, u)).count();
    let dangling = graph.nodes().filter(|&u| graph.out_degree(u) == 0).count();
    let mut lines = vec![
        format!("nodes: {}", graph.node_count()),
        format!("arcs: {}", graph.edge_count()),
        format!("mutual pairs: {mutual}"),
        format!("nodes without followees: {dangling}"),
    ];
    let outputs: Vec<&Path> = out.into_iter().collect();
    match out {
        Some(path) => write_csv(
            path,
            &manifest.run_id,
            histogram.iter().map(|&(bin_lower, count)| HistogramRow { bin_lower, count }),
        )?,
        None => {
            lines.push("bin_lower,count".to_string());
            lines.extend(histogram.iter().map(|(lower, count)| format!("{lower},{count}")));
        }
    }
    let summary = json!({
        "nodes": graph.node_count(),
        "arcs": graph.edge_count(),
        "mutual_pairs": mutual,
        "dangling": dangling,
    });
    Ok(StageOutcome { manifest: finish(manifest, started, &outputs, summary), lines, nonconverged: 0 })
}

pub fn communities(cache: &Path, cfg: &LouvainConfig, out: &Path) -> Result<StageOutcome> {
    let started = Instant::now();
    let manifest = StageManifest::new("communities", vec![InputRecord::digest("cache", cache)?], to_value(cfg));
    let graph = load_graph(cache)?;
    let undirected = symmetrize(&graph);
    let dendrogram = louvain(&undirected, cfg).map_err(|e| CliError::Invalid(e.to_string()))?;
    let partition = &dendrogram.partition;
    let literal = modularity(&undirected, partition, ModularityVariant::OffDiagonal)
        .expect("the Louvain partition covers the graph");
    write_csv(
        out,
        &manifest.run_id,
        (0..graph.node_count() as NodeId)
            .map(|node_id| PartitionRow { node_id, community_id: partition.community_of(node_id) }),
    )?;

    let sizes = partition.sizes();
    let lines = vec![
        format!("communities: {}", partition.community_count()),
        format!("modularity (standard): {}", dendrogram.modularity),
        format!("modularity (off-diagonal): {literal}"),
        format!("levels: {}", dendrogram.levels.len()),
    ];
    let summary = json!({
        "communities": partition.community_count(),
        "modularity": dendrogram.modularity,
        "modularity_off_diagonal": literal,
        "levels": dendrogram.levels.len(),
        "largest_community": sizes.iter().max(),
        "smallest_community": sizes.iter().min(),
    });
    Ok(StageOutcome { manifest: finish(manifest, started, &[out], summary), lines, nonconverged: 0 })
}

/// Reads `partition.csv` for a graph of `node_count` nodes. Returns the
/// dense partition and, per dense community, the label used in the file.
fn read_partition(path: &Path, node_count: usize) -> Result<(Partition, Vec<u32>)> {
    let rows: Vec<PartitionRow> = read_csv(path)?;
    let mut labels: Vec<Option<u32>> = vec![None; node_count];
    for row in &rows {
        let slot = labels
            .get_mut(row.node_id as usize)
            .ok_or_else(|| CliError::input(path, format!("node {} is outside the graph ({node_count} nodes)", row.node_id)))?;
        if slot.replace(row.community_id).is_some() {
            return Err(CliError::input(path, format!("node {} is listed twice", row.node_id)));
        }
    }
    let labels: Vec<u32> = labels
        .iter()
        .enumerate()
        .map(|(node, label)| label.ok_or_else(|| CliError::input(path, format!("node {node} has no community"))))
        .collect::<Result<_>>()?;
    let partition = Partition::from_labels(&labels);
    let names = partition.communities().map(|(_, members)| labels[members[0] as usize]).collect();
    Ok((partition, names))
}

pub fn rank(
    cache: &Path,
    partition_path: &Path,
    cfg: &RankConfig,
    io_source: IoSource,
    profiles: Option<&ProfileFiles>,
    out: &Path,
) -> Result<StageOutcome> {
    let started = Instant::now();
    cfg.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    let profiles = match (io_source, profiles) {
        (IoSource::Profile, None) => {
            return Err(CliError::Invalid("--io-source profile needs --profiles".into()));
        }
        (IoSource::Profile, Some(files)) => Some(files),
        (IoSource::Local, _) => None,
    };
    let mut inputs = vec![InputRecord::digest("cache", cache)?, InputRecord::digest("partition", partition_path)?];
    if let Some(files) = profiles {
        inputs.extend(files.inputs()?);
    }
    let manifest = StageManifest::new("rank", inputs, json!({ "rank": to_value(cfg), "io_source": io_source }));

    let graph = load_graph(cache)?;
    let (partition, names) = read_partition(partition_path, graph.node_count())?;
    let counts = match profiles {
        Some(files) => Some(follow_counts(&files.load(graph.node_count())?, graph.node_count())),
        None => None,
    };
    let ranks = rank_all_communities(&graph, &partition, cfg, counts.as_deref())
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    let mut rows = Vec::with_capacity(graph.node_count());
    for community in &ranks.communities {
        let community_id = names[community.community as usize];
        for ((&node_id, &io), &pagerank) in
            community.members.iter().zip(&community.io).zip(&community.importance.values)
        {
            rows.push(RankRow { node_id, community_id, io, pagerank, converged: community.importance.converged });
        }
    }
    rows.sort_by_key(|r| r.node_id);
    write_csv(out, &manifest.run_id, rows)?;

    let nonconverged = ranks.nonconverged().count();
    let max_iterations = ranks.communities.iter().map(|c| c.importance.iterations).max().unwrap_or(0);
    let mut lines = vec![
        format!("communities ranked: {}", ranks.communities.len()),
        format!("most sweeps in one community: {max_iterations}"),
    ];
    if nonconverged > 0 {
        lines.push(format!("communities not converged: {nonconverged}"));
    }
    if ranks.io_fallbacks > 0 {
        lines.push(format!("credibility from community degrees (no profile counts): {}", ranks.io_fallbacks));
    }
    let summary = json!({
        "communities": ranks.communities.len(),
        "nonconverged": nonconverged,
        "max_iterations": max_iterations,
        "io_fallbacks": ranks.io_fallbacks,
    });
    Ok(StageOutcome { manifest: finish(manifest, started, &[out], summary), lines, nonconverged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectSummary {
    pub communities: usize,
    pub small_communities: usize,
    pub flagged: usize,
    pub total: usize,
    pub proportion: f64,
    pub method: String,
    pub min_size: usize,
}

pub fn detect(ranks_path: &Path, cfg: &DetectConfig, out: &Path, summary_path: &Path) -> Result<StageOutcome> {
    let started = Instant::now();
    let manifest = StageManifest::new("detect", vec![InputRecord::digest("ranks", ranks_path)?], to_value(cfg));
    let rows: Vec<RankRow> = read_csv(ranks_path)?;
    let mut groups: BTreeMap<u32, CommunityValues> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for row in rows {
        if !seen.insert(row.node_id) {
            return Err(CliError::input(ranks_path, format!("node {} is listed twice", row.node_id)));
        }
        if !row.pagerank.is_finite() {
            return Err(CliError::input(ranks_path, format!("node {} has non-finite pagerank", row.node_id)));
        }
        let group = groups.entry(row.community_id).or_insert_with(|| CommunityValues {
            community: row.community_id,
            nodes: Vec::new(),
            values: Vec::new(),
        });
        group.nodes.push(row.node_id);
        group.values.push(row.pagerank);
    }
    let groups: Vec<CommunityValues> = groups.into_values().collect();
    let report = detect_zombies(&groups, cfg).map_err(|e| CliError::input(ranks_path, e))?;

    let mut guard = OutputGuard::default();
    guard.track(out);
    write_csv(
        out,
        &manifest.run_id,
        report.entries.iter().map(|e| ReportRow {
            node_id: e.node,
            community_id: e.community,
            pagerank: e.pagerank,
            threshold: e.threshold,
            label: e.label,
        }),
    )?;
    let summary = DetectSummary {
        communities: report.communities,
        small_communities: report.small_communities,
        flagged: report.flagged,
        total: report.total,
        proportion: report.proportion(),
        method: cfg.method.to_string(),
        min_size: cfg.min_size,
    };
    guard.track(summary_path);
    write_json(summary_path, &manifest.run_id, &summary)?;
    guard.disarm();

    let lines = vec![
        format!("communities: {} ({} below minimum size {})", report.communities, report.small_communities, cfg.min_size),
        format!("flagged: {} of {}", report.flagged, report.total),
        format!("zombie proportion: {}", report.proportion()),
    ];
    Ok(StageOutcome {
        manifest: finish(manifest, started, &[out, summary_path], to_value(&summary)),
        lines,
        nonconverged: 0,
    })
}

/// Optional region breakdown of flagged accounts.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRequest {
    pub profiles: ProfileFiles,
    pub out: PathBuf,
}

pub fn evaluate(
    report_path: &Path,
    truth_path: &Path,
    transpose: bool,
    regions: Option<&RegionRequest>,
    out: &Path,
) -> Result<StageOutcome> {
    let started = Instant::now();
    let mut inputs = vec![InputRecord::digest("report", report_path)?, InputRecord::digest("truth", truth_path)?];
    if let Some(request) = regions {
        inputs.extend(request.profiles.inputs()?);
    }
    let manifest = StageManifest::new("evaluate", inputs, json!({ "transpose": transpose }));

    let report: Vec<ReportRow> = read_csv(report_path)?;
    let mut predicted = BTreeMap::new();
    for row in &report {
        if predicted.insert(row.node_id, row.label).is_some() {
            return Err(CliError::input(report_path, format!("node {} is listed twice", row.node_id)));
        }
    }
    let mut truth = BTreeMap::new();
    for row in read_csv::<TruthRow>(truth_path)? {
        let label: Label = row.is_zombie.trim().parse().map_err(|e: String| CliError::input(truth_path, e))?;
        if truth.insert(row.node_id, label).is_some() {
            return Err(CliError::input(truth_path, format!("node {} is listed twice", row.node_id)));
        }
    }
    let mut cm = confusion(&predicted, &truth).map_err(|e| CliError::Invalid(e.to_string()))?;
    if transpose {
        cm = cm.transpose();
    }
    let scores = metrics(&cm);
    let mut result = to_value(&cm);
    if let (Value::Object(fields), Value::Object(more)) = (&mut result, to_value(&scores)) {
        fields.extend(more);
    }

    let mut guard = OutputGuard::default();
    let mut outputs: Vec<&Path> = vec![out];
    guard.track(out);
    write_json(out, &manifest.run_id, &result)?;
    let mut lines = vec![
        format!("tp: {}  fn: {}  fp: {}  tn: {}", cm.tp, cm.fn_, cm.fp, cm.tn),
        format!("accuracy: {}", show(scores.accuracy.value())),
        format!("precision: {}", show(scores.precision.value())),
        format!("recall: {}", show(scores.recall.value())),
        format!("f1: {}", show(scores.f1.value())),
    ];
    if let Some(request) = regions {
        let node_count = predicted.keys().next_back().map_or(0, |&max| max as usize + 1);
        let profiles = request.profiles.load(node_count.max(truth.len()))?;
        let region_of: BTreeMap<NodeId, Option<&str>> =
            profiles.iter().map(|p| (p.node, p.region.as_deref())).collect();
        let flagged = predicted.iter().filter(|(_, l)| l.is_zombie()).map(|(n, _)| region_of.get(n).copied().flatten());
        let distribution = region_distribution(flagged);
        guard.track(&request.out);
        write_csv(
            &request.out,
            &manifest.run_id,
            distribution.iter().map(|(region, count)| RegionRow { region: region.clone(), count: *count }),
        )?;
        outputs.push(&request.out);
        lines.extend(distribution.iter().take(5).map(|(region, count)| format!("region {region}: {count}")));
    }
    guard.disarm();
    Ok(StageOutcome { manifest: finish(manifest, started, &outputs, result), lines, nonconverged: 0 })
}

fn show(value: Option<f64>) -> String {
    value.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

pub fn synth(config_path: &Path, out_dir: &Path) -> Result<StageOutcome> {
    let started = Instant::now();
    let file = File::open(config_path).map_err(CliError::io(config_path))?;
    let cfg: SynthConfig =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::input(config_path, e))?;
    let manifest = StageManifest::new("synth", vec![InputRecord::digest("config", config_path)?], to_value(&cfg));
    let corpus = synth::generate(&cfg).map_err(CliError::synth(config_path))?;

    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    let files: Vec<PathBuf> = [synth::NETWORK_FILE, synth::UIDLIST_FILE, synth::PROFILE_FILE, synth::TRUTH_FILE]
        .iter()
        .map(|name| out_dir.join(name))
        .collect();
    let mut guard = OutputGuard::default();
    files.iter().for_each(|f| guard.track(f));
    synth::emit_corpus(&corpus, out_dir, Some(&format!("manifest: {}", manifest.run_id)))
        .map_err(CliError::synth(out_dir))?;
    guard.disarm();

    let zombies = corpus.truth.zombie_count();
    let lines = vec![
        format!("nodes: {}", corpus.graph.node_count()),
        format!("arcs: {}", corpus.graph.edge_count()),
        format!("zombies: {zombies}"),
    ];
    let summary = json!({ "nodes": corpus.graph.node_count(), "arcs": corpus.graph.edge_count(), "zombies": zombies });
    let outputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    Ok(StageOutcome { manifest: finish(manifest, started, &outputs, summary), lines, nonconverged: 0 })
}

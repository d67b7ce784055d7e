//! Synthetic follower graphs with planted communities and injected zombies.
//!
//! Nodes are laid out block by block. For every unordered pair of normal
//! accounts `{u, v}` the generator draws `u -> v` and `v -> u` independently
//! with probability `p_in` (same block) or `p_out`; when exactly one direction
//! came up, the other is added with probability `reciprocity`. Each zombie
//! then follows a uniform sample of normal accounts in its own block and is
//! followed back by at most `zombie_max_in_degree` of them.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with `seed`, consumed in a
//! fixed order: zombie selection, normal arcs, zombie arcs, regions, genders.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::Label;
use crate::graph::{build_graph, DirectedGraph, InputArc, NodeId};
use crate::ingest::{
    write_profiles, write_uidlist, write_weibo_network, IngestError, ProfileSchema, RawNetwork, UserProfile,
};

pub const NETWORK_FILE: &str = "weibo_network.txt";
pub const UIDLIST_FILE: &str = "uidlist.txt";
pub const PROFILE_FILE: &str = "user_profile.csv";
pub const TRUTH_FILE: &str = "truth.csv";

/// First synthetic uid; node `i` gets `UID_BASE + i`.
const UID_BASE: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic corpus configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("truth file: {0}")]
    Truth(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionWeight {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub reciprocity: f64,
    pub zombie_fraction: f64,
    /// Inclusive range of zombie out-degrees.
    pub zombie_out_degree: (usize, usize),
    pub zombie_max_in_degree: usize,
    pub regions: Vec<RegionWeight>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let regions = [("Beijing", 4.0), ("Guangdong", 4.0), ("Shanghai", 3.0), ("Sichuan", 1.5), ("Zhejiang", 1.5)]
            .into_iter()
            .map(|(name, weight)| RegionWeight { name: name.into(), weight })
            .collect();
        SynthConfig {
            block_sizes: vec![100; 4],
            p_in: 0.1,
            p_out: 0.005,
            reciprocity: 0.5,
            zombie_fraction: 0.0,
            zombie_out_degree: (10, 20),
            zombie_max_in_degree: 1,
            regions,
            seed: 42,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let invalid = |msg: String| Err(SynthError::Invalid(msg));
        if self.block_sizes.iter().sum::<usize>() < 1 {
            return invalid("block sizes must sum to at least 1".into());
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out), ("reciprocity", self.reciprocity)] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(0.0..1.0).contains(&self.zombie_fraction) {
            return invalid(format!("zombie_fraction must lie in [0, 1), got {}", self.zombie_fraction));
        }
        if self.zombie_out_degree.0 > self.zombie_out_degree.1 {
            return invalid(format!("empty zombie out-degree range {:?}", self.zombie_out_degree));
        }
        if self.regions.is_empty() || self.regions.iter().any(|r| !(r.weight >= 0.0)) {
            return invalid("regions need at least one entry and non-negative weights".into());
        }
        if self.p_in <= self.p_out {
            log::warn!("p_in ({}) <= p_out ({}): no planted community structure", self.p_in, self.p_out);
        }
        Ok(())
    }
}

/// Planted labels of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub block: Vec<u32>,
    pub is_zombie: Vec<bool>,
    pub region: Vec<String>,
}

impl GroundTruth {
    pub fn zombie_count(&self) -> usize {
        self.is_zombie.iter().filter(|&&z| z).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub graph: DirectedGraph,
    pub truth: GroundTruth,
    pub profiles: Vec<UserProfile>,
    pub uids: Vec<String>,
}

/// Splits `total` zombies over blocks in proportion to their sizes, by
/// largest remainder (ties to the lower block index).
fn zombies_per_block(sizes: &[usize], fraction: f64, total: usize) -> Vec<usize> {
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * fraction).collect();
    let mut counts: Vec<usize> = exact.iter().zip(sizes).map(|(e, &s)| (e.floor() as usize).min(s)).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(counts.iter().sum());
    for &b in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if counts[b] < sizes[b] {
            counts[b] += 1;
            remaining -= 1;
        }
    }
    counts
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticCorpus, SynthError> {
    cfg.validate()?;
    let n: usize = cfg.block_sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut block = Vec::with_capacity(n);
    let mut block_start = Vec::with_capacity(cfg.block_sizes.len());
    for (b, &size) in cfg.block_sizes.iter().enumerate() {
        block_start.push(block.len());
        block.extend(std::iter::repeat(b as u32).take(size));
    }

    let zombie_total = (cfg.zombie_fraction * n as f64).round() as usize;
    let per_block = zombies_per_block(&cfg.block_sizes, cfg.zombie_fraction, zombie_total);
    let mut is_zombie = vec![false; n];
    let mut normals_of_block: Vec<Vec<NodeId>> = Vec::with_capacity(cfg.block_sizes.len());
    for (b, (&size, &zombies)) in cfg.block_sizes.iter().zip(&per_block).enumerate() {
        let normals = size - zombies;
        if zombies > 0 && cfg.zombie_out_degree.1 > normals {
            return Err(SynthError::Invalid(format!(
                "block {b} has {normals} normal account(s), fewer than the zombie out-degree maximum {}",
                cfg.zombie_out_degree.1
            )));
        }
        for offset in index::sample(&mut rng, size, zombies) {
            is_zombie[block_start[b] + offset] = true;
        }
        normals_of_block.push(
            (block_start[b]..block_start[b] + size).filter(|&v| !is_zombie[v]).map(|v| v as NodeId).collect(),
        );
    }

    let mut arcs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for u in 0..n {
        if is_zombie[u] {
            continue;
        }
        for v in u + 1..n {
            if is_zombie[v] {
                continue;
            }
            let p = if block[u] == block[v] { cfg.p_in } else { cfg.p_out };
            let mut forward = rng.gen_bool(p);
            let mut backward = rng.gen_bool(p);
            if forward != backward && rng.gen_bool(cfg.reciprocity) {
                forward = true;
                backward = true;
            }
            if forward {
                arcs.insert((u as NodeId, v as NodeId));
            }
            if backward {
                arcs.insert((v as NodeId, u as NodeId));
            }
        }
    }

    for z in 0..n {
        if !is_zombie[z] {
            continue;
        }
        let normals = &normals_of_block[block[z] as usize];
        let out = rng.gen_range(cfg.zombie_out_degree.0..=cfg.zombie_out_degree.1);
        for i in index::sample(&mut rng, normals.len(), out) {
            arcs.insert((z as NodeId, normals[i]));
        }
        let fans = rng.gen_range(0..=cfg.zombie_max_in_degree.min(normals.len()));
        for i in index::sample(&mut rng, normals.len(), fans) {
            arcs.insert((normals[i], z as NodeId));
        }
    }

    let weights = WeightedIndex::new(cfg.regions.iter().map(|r| r.weight))
        .map_err(|e| SynthError::Invalid(format!("region weights: {e}")))?;
    let region: Vec<String> = (0..n).map(|_| cfg.regions[weights.sample(&mut rng)].name.clone()).collect();

    let input: Vec<InputArc> = arcs.iter().map(|&(u, v)| InputArc::new(u, v, false)).collect();
    let (graph, _) = build_graph(&input, n).map_err(IngestError::from)?;
    let uids: Vec<String> = (0..n as u64).map(|i| (UID_BASE + i).to_string()).collect();
    let profiles = (0..n)
        .map(|i| {
            let u = i as NodeId;
            let mutual = graph.successors(u).iter().filter(|&&v| graph.has_arc(v, u)).count();
            UserProfile {
                node: u,
                uid: uids[i].clone(),
                name: Some(format!("user{i}")),
                gender: Some(if rng.gen_bool(0.5) { "f" } else { "m" }.to_string()),
                verified: Some("false".to_string()),
                region: Some(region[i].clone()),
                followers: Some(graph.in_degree(u) as u64),
                followees: Some(graph.out_degree(u) as u64),
                reciprocal: Some(mutual as u64),
                // Content is not simulated.
                tweets: Some(0),
                retweets: Some(0),
            }
        })
        .collect();

    Ok(SyntheticCorpus { graph, truth: GroundTruth { block, is_zombie, region }, profiles, uids })
}

/// One row of `truth.csv`; `node_id` is the dense id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub node_id: NodeId,
    pub block_id: u32,
    pub is_zombie: u8,
    pub region: String,
}

impl TruthRecord {
    pub fn label(&self) -> Label {
        if self.is_zombie != 0 {
            Label::Zombie
        } else {
            Label::Normal
        }
    }
}

/// Writes `truth.csv`, preceded by `# <comment>` when given.
pub fn write_truth<W: Write>(corpus: &SyntheticCorpus, comment: Option<&str>, mut out: W) -> Result<(), SynthError> {
    if let Some(comment) = comment {
        writeln!(out, "# {comment}")?;
    }
    let mut csv = csv::Writer::from_writer(out);
    for i in 0..corpus.graph.node_count() {
        csv.serialize(TruthRecord {
            node_id: i as NodeId,
            block_id: corpus.truth.block[i],
            is_zombie: corpus.truth.is_zombie[i] as u8,
            region: corpus.truth.region[i].clone(),
        })?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads `truth.csv`; lines starting with `#` are skipped.
pub fn read_truth<R: Read>(input: R) -> Result<Vec<TruthRecord>, SynthError> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    Ok(csv.deserialize().collect::<Result<_, _>>()?)
}

/// Writes the network, uid list, profiles and truth table into `dir`;
/// `truth_comment` becomes a leading `#` line of the truth table.
pub fn emit_corpus(corpus: &SyntheticCorpus, dir: impl AsRef<Path>, truth_comment: Option<&str>) -> Result<(), SynthError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let create = |name: &str| -> std::io::Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    write_weibo_network(&RawNetwork::from_graph(&corpus.graph), create(NETWORK_FILE)?)?;
    write_uidlist(&corpus.uids, create(UIDLIST_FILE)?)?;
    write_profiles(&corpus.profiles, &ProfileSchema::default(), create(PROFILE_FILE)?)?;
    write_truth(corpus, truth_comment, create(TRUTH_FILE)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::symmetrize;
    use crate::ingest::{parse_profiles, parse_uidlist, parse_weibo_network};

    fn config(blocks: Vec<usize>) -> SynthConfig {
        SynthConfig { block_sizes: blocks, ..Default::default() }
    }

    #[test]
    fn complete_mutual_digraph() {
        let cfg = SynthConfig { p_in: 1.0, p_out: 0.0, reciprocity: 1.0, ..config(vec![4]) };
        let corpus = generate(&cfg).unwrap();
        assert_eq!(corpus.graph.edge_count(), 12);
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(corpus.graph.has_arc(u, v), u != v);
            }
        }
    }

    #[test]
    fn exact_zombie_count() {
        let cfg = SynthConfig { zombie_fraction: 0.5, zombie_out_degree: (1, 2), ..config(vec![10]) };
        assert_eq!(generate(&cfg).unwrap().truth.zombie_count(), 5);
        let cfg = SynthConfig { zombie_fraction: 0.1, zombie_out_degree: (1, 2), ..config(vec![7, 7, 7]) };
        assert_eq!(generate(&cfg).unwrap().truth.zombie_count(), 2);
    }

    #[test]
    fn largest_remainder_split() {
        assert_eq!(zombies_per_block(&[7, 7, 7], 0.1, 2), vec![1, 1, 0]);
        assert_eq!(zombies_per_block(&[500; 5], 0.1, 250), vec![50; 5]);
        assert_eq!(zombies_per_block(&[1, 9], 0.5, 5), vec![1, 4]);
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = SynthConfig { zombie_fraction: 0.1, ..config(vec![30, 30]) };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.graph.arcs().collect::<Vec<_>>(), b.graph.arcs().collect::<Vec<_>>());
        assert_eq!(a.profiles, b.profiles);
        let c = generate(&SynthConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.graph.arcs().collect::<Vec<_>>(), c.graph.arcs().collect::<Vec<_>>());
    }

    #[test]
    fn zombie_degree_bounds() {
        let cfg = SynthConfig {
            zombie_fraction: 0.2,
            zombie_out_degree: (5, 9),
            zombie_max_in_degree: 2,
            ..config(vec![40, 60])
        };
        let corpus = generate(&cfg).unwrap();
        for v in corpus.graph.nodes() {
            if corpus.truth.is_zombie[v as usize] {
                assert!(corpus.graph.in_degree(v) <= 2);
                assert!((5..=9).contains(&corpus.graph.out_degree(v)));
                let b = corpus.truth.block[v as usize];
                assert!(corpus.graph.successors(v).iter().all(|&t| corpus.truth.block[t as usize] == b));
            }
        }
    }

    #[test]
    fn infeasible_out_degree_rejected() {
        let cfg = SynthConfig { zombie_fraction: 0.5, zombie_out_degree: (5, 6), ..config(vec![10]) };
        assert!(matches!(generate(&cfg), Err(SynthError::Invalid(_))));
        assert!(matches!(generate(&SynthConfig { p_in: 1.5, ..config(vec![3]) }), Err(SynthError::Invalid(_))));
        assert!(matches!(generate(&config(vec![])), Err(SynthError::Invalid(_))));
    }

    #[test]
    fn no_cross_block_components_without_p_out() {
        let cfg = SynthConfig { p_out: 0.0, zombie_fraction: 0.1, zombie_out_degree: (2, 4), ..config(vec![20, 25, 15]) };
        let corpus = generate(&cfg).unwrap();
        let u = symmetrize(&corpus.graph);
        for v in 0..u.node_count() as NodeId {
            for (w, _) in u.neighbors(v) {
                assert_eq!(corpus.truth.block[v as usize], corpus.truth.block[w as usize]);
            }
        }
    }

    #[test]
    fn emitted_files_reingest() {
        let cfg = SynthConfig { zombie_fraction: 0.1, ..config(vec![25, 25]) };
        let corpus = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_corpus(&corpus, dir.path(), Some("manifest: test")).unwrap();

        let network = File::open(dir.path().join(NETWORK_FILE)).unwrap();
        let (raw, _) = parse_weibo_network(std::io::BufReader::new(network)).unwrap();
        assert_eq!(raw.to_graph().unwrap().0, corpus.graph);

        let uids = parse_uidlist(std::io::BufReader::new(File::open(dir.path().join(UIDLIST_FILE)).unwrap())).unwrap();
        assert_eq!(uids, corpus.uids);
        let profiles = File::open(dir.path().join(PROFILE_FILE)).unwrap();
        let (profiles, _) = parse_profiles(profiles, &ProfileSchema::default(), Some(&uids)).unwrap();
        assert_eq!(profiles, corpus.profiles);

        let truth = read_truth(File::open(dir.path().join(TRUTH_FILE)).unwrap()).unwrap();
        assert_eq!(truth.len(), 50);
        assert!(truth.iter().enumerate().all(|(i, t)| t.node_id == i as NodeId));
        assert_eq!(truth.iter().filter(|t| t.label() == Label::Zombie).count(), 5);
    }

    #[test]
    fn region_tallies_match_truth() {
        let cfg = SynthConfig { block_sizes: vec![100], ..Default::default() };
        let corpus = generate(&cfg).unwrap();
        for (profile, region) in corpus.profiles.iter().zip(&corpus.truth.region) {
            assert_eq!(profile.region.as_deref(), Some(region.as_str()));
        }
        assert!(corpus.truth.region.iter().all(|r| cfg.regions.iter().any(|w| &w.name == r)));
    }
}

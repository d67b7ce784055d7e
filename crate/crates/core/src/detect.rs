//! Per-community outlier thresholding of PageRank values.
//!
//! Within a community, an account is flagged as a zombie when its rank lies
//! strictly below the lower Tukey fence `Q1 − 1.5·(Q3 − Q1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DetectError {
    #[error("quartiles of an empty sample are undefined")]
    EmptySample,
    #[error("community {community}: {nodes} node(s) but {values} value(s)")]
    LengthMismatch { community: u32, nodes: usize, values: usize },
}

/// Percentile estimator used for the quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuartileMethod {
    /// Linear interpolation at fractional index `(n − 1)·p/100`.
    #[default]
    Linear,
    /// The smallest value with at least `p`% of the sample at or below it.
    NearestRank,
}

impl fmt::Display for QuartileMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuartileMethod::Linear => "linear",
            QuartileMethod::NearestRank => "nearest-rank",
        })
    }
}

impl FromStr for QuartileMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(QuartileMethod::Linear),
            "nearest-rank" => Ok(QuartileMethod::NearestRank),
            other => Err(format!("unknown quartile method `{other}` (expected linear or nearest-rank)")),
        }
    }
}

/// `p`-th percentile of an ascending, nonempty sample.
fn percentile_sorted(sorted: &[f64], p: f64, method: QuartileMethod) -> f64 {
    let n = sorted.len();
    match method {
        QuartileMethod::Linear => {
            let h = (n - 1) as f64 * p / 100.0;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
        QuartileMethod::NearestRank => {
            let rank = (p / 100.0 * n as f64).ceil() as usize;
            sorted[rank.clamp(1, n) - 1]
        }
    }
}

/// First and third quartiles `(Q1, Q3)`.
pub fn quartiles(values: &[f64], method: QuartileMethod) -> Result<(f64, f64), DetectError> {
    if values.is_empty() {
        return Err(DetectError::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((percentile_sorted(&sorted, 25.0, method), percentile_sorted(&sorted, 75.0, method)))
}

/// Lower fence `Q1 − 1.5·(Q3 − Q1)`. It can be negative, in which case no
/// rank value falls below it.
pub fn iqr_threshold(values: &[f64], method: QuartileMethod) -> Result<f64, DetectError> {
    let (q1, q3) = quartiles(values, method)?;
    Ok(q1 - 1.5 * (q3 - q1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Zombie,
    Normal,
}

impl Label {
    pub fn is_zombie(self) -> bool {
        self == Label::Zombie
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Zombie => "zombie",
            Label::Normal => "normal",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zombie" | "1" | "true" => Ok(Label::Zombie),
            "normal" | "0" | "false" => Ok(Label::Normal),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    /// Communities smaller than this are labelled normal without a threshold.
    pub min_size: usize,
    pub method: QuartileMethod,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig { min_size: 5, method: QuartileMethod::Linear }
    }
}

/// Rank values of one community's members, aligned by position.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityValues {
    pub community: u32,
    pub nodes: Vec<NodeId>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZombieEntry {
    pub node: NodeId,
    pub community: u32,
    pub pagerank: f64,
    /// `None` for communities below the minimum size.
    pub threshold: Option<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZombieReport {
    /// One entry per node, ordered by node id.
    pub entries: Vec<ZombieEntry>,
    pub communities: usize,
    /// Communities skipped for being smaller than `config.min_size`.
    pub small_communities: usize,
    pub flagged: usize,
    pub total: usize,
    pub config: DetectConfig,
}

impl ZombieReport {
    /// Flagged share of all nodes; 0 for an empty report.
    pub fn proportion(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.flagged as f64 / self.total as f64
        }
    }
}

/// Thresholds each community separately and labels its members; a member is
/// a zombie iff its value is strictly below the community threshold.
pub fn detect_zombies(communities: &[CommunityValues], cfg: &DetectConfig) -> Result<ZombieReport, DetectError> {
    let mut entries = Vec::new();
    let mut small_communities = 0;
    for c in communities {
        if c.nodes.len() != c.values.len() {
            return Err(DetectError::LengthMismatch {
                community: c.community,
                nodes: c.nodes.len(),
                values: c.values.len(),
            });
        }
        let threshold = if c.nodes.len() >= cfg.min_size && !c.nodes.is_empty() {
            Some(iqr_threshold(&c.values, cfg.method)?)
        } else {
            small_communities += 1;
            None
        };
        entries.extend(c.nodes.iter().zip(&c.values).map(|(&node, &pagerank)| ZombieEntry {
            node,
            community: c.community,
            pagerank,
            threshold,
            label: match threshold {
                Some(t) if pagerank < t => Label::Zombie,
                _ => Label::Normal,
            },
        }));
    }
    entries.sort_by_key(|e| e.node);
    let flagged = entries.iter().filter(|e| e.label.is_zombie()).count();
    Ok(ZombieReport {
        total: entries.len(),
        flagged,
        entries,
        communities: communities.len(),
        small_communities,
        config: *cfg,
    })
}

//! Credibility-weighted PageRank inside communities.
//!
//! An account's credibility is its share of fans among all its connections,
//! `IO = fans / (fans + followees)`. In uneven mode a follower hands its rank
//! to its followees in proportion to their credibility instead of splitting it
//! evenly, so accounts followed mostly by low-credibility accounts stay low.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{community_views, CommunityError, Partition};
use crate::graph::{DirectedGraph, NodeId, SubgraphView};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("uneven mode needs credibility scores")]
    MissingIo,
    #[error("cannot rank an empty subgraph")]
    EmptySubgraph,
    #[error("{expected} nodes but {got} credibility scores")]
    IoSizeMismatch { expected: usize, got: usize },
    #[error("invalid rank configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Community(#[from] CommunityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMode {
    /// Each follower splits its rank evenly over its followees.
    Even,
    /// Each follower splits its rank in proportion to followee credibility.
    #[default]
    Uneven,
}

/// Where fan and followee counts for credibility scores come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IoSource {
    /// In- and out-degree inside the community.
    #[default]
    Local,
    /// Global follower/followee counts from user profiles.
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankConfig {
    pub damping: f64,
    /// Iteration stops once the L1 change of a sweep drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub mode: RankMode,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig { damping: 0.85, tolerance: 1e-10, max_iterations: 1000, mode: RankMode::Uneven }
    }
}

impl RankConfig {
    pub fn validate(&self) -> Result<(), RankError> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(RankError::InvalidConfig(format!("damping must be in (0, 1], got {}", self.damping)));
        }
        if !(self.tolerance > 0.0) {
            return Err(RankError::InvalidConfig(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iterations < 1 {
            return Err(RankError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// `fan_num / (follow_num + fan_num)`, and 0 for an account with neither.
pub fn io_score(fan_num: u64, follow_num: u64) -> f64 {
    let total = fan_num + follow_num;
    if total == 0 {
        0.0
    } else {
        fan_num as f64 / total as f64
    }
}

/// Global fan (follower) and followee counts of one account.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FollowCounts {
    pub fans: Option<u64>,
    pub follows: Option<u64>,
}

/// Credibility scores indexed by local id.
#[derive(Debug, Clone, PartialEq)]
pub struct IoScores(pub Vec<f64>);

impl IoScores {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Scores every member of `view`. With `counts` (indexed by parent id), a
/// member's global counts are used when both are known; otherwise, and when
/// `counts` is `None`, its in/out degree inside the view. Returns the scores
/// and the number of members that fell back to local degrees.
pub fn io_scores_for(view: &SubgraphView<'_>, counts: Option<&[FollowCounts]>) -> (IoScores, usize) {
    let mut fallbacks = 0;
    let scores = (0..view.node_count() as NodeId)
        .map(|local| {
            let global = counts.and_then(|c| c.get(view.parent_id(local) as usize)).and_then(|c| c.fans.zip(c.follows));
            match global {
                Some((fans, follows)) => io_score(fans, follows),
                None => {
                    if counts.is_some() {
                        fallbacks += 1;
                    }
                    io_score(view.in_degree(local) as u64, view.out_degree(local) as u64)
                }
            }
        })
        .collect();
    (IoScores(scores), fallbacks)
}

/// Per-arc transition probabilities aligned with a view's out-adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionWeights {
    pub weights: Vec<f64>,
    /// Rows whose followees all score 0 and were split evenly instead.
    pub even_fallback_rows: usize,
}

impl TransitionWeights {
    pub fn row<'a>(&'a self, view: &SubgraphView<'_>, local: NodeId) -> &'a [f64] {
        &self.weights[view.out_range(local)]
    }
}

/// `1 / out_degree(u)` on every arc out of `u`.
pub fn even_weights(view: &SubgraphView<'_>) -> TransitionWeights {
    let mut weights = vec![0.0; view.arc_count()];
    for u in 0..view.node_count() as NodeId {
        let range = view.out_range(u);
        let share = 1.0 / range.len() as f64;
        weights[range].fill(share);
    }
    TransitionWeights { weights, even_fallback_rows: 0 }
}

/// `K_v(u) = IO_v / Σ_{w ∈ out(u)} IO_w` on every arc `u -> v`, falling back
/// to an even split when that sum is 0.
pub fn transition_weights(view: &SubgraphView<'_>, io: &IoScores) -> TransitionWeights {
    let mut weights = vec![0.0; view.arc_count()];
    let mut even_fallback_rows = 0;
    for u in 0..view.node_count() as NodeId {
        let range = view.out_range(u);
        let followees = view.successors(u);
        let total: f64 = followees.iter().map(|&v| io.0[v as usize]).sum();
        if total > 0.0 {
            for (slot, &v) in weights[range].iter_mut().zip(followees) {
                *slot = io.0[v as usize] / total;
            }
        } else if !followees.is_empty() {
            even_fallback_rows += 1;
            weights[range].fill(1.0 / followees.len() as f64);
        }
    }
    TransitionWeights { weights, even_fallback_rows }
}

/// PageRank of the members of one community, indexed by local id.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// L1 change of the last sweep.
    pub residual: f64,
    pub converged: bool,
    /// L1 change of every sweep, in order.
    pub residuals: Vec<f64>,
}

/// Power iteration from the uniform vector:
///
/// `x' = (1 − d)/n + d · (Wᵀx + D/n)`
///
/// where row `u` of `W` holds the transition weights out of `u` and `D` is the
/// rank held by members without followees, spread uniformly. The vector is
/// renormalized to sum to 1 after every sweep. Hitting `max_iterations`
/// returns the last iterate with `converged = false`.
pub fn pagerank(
    view: &SubgraphView<'_>,
    cfg: &RankConfig,
    io: Option<&IoScores>,
) -> Result<ImportanceVector, RankError> {
    cfg.validate()?;
    let n = view.node_count();
    if n == 0 {
        return Err(RankError::EmptySubgraph);
    }
    let weights = match cfg.mode {
        RankMode::Even => even_weights(view),
        RankMode::Uneven => {
            let io = io.ok_or(RankError::MissingIo)?;
            if io.0.len() != n {
                return Err(RankError::IoSizeMismatch { expected: n, got: io.0.len() });
            }
            transition_weights(view, io)
        }
    };
    Ok(power_iteration(view, &weights, cfg))
}

fn power_iteration(view: &SubgraphView<'_>, weights: &TransitionWeights, cfg: &RankConfig) -> ImportanceVector {
    let n = view.node_count();
    if n == 1 {
        return ImportanceVector { values: vec![1.0], iterations: 0, residual: 0.0, converged: true, residuals: vec![] };
    }
    let d = cfg.damping;
    let nf = n as f64;
    let dangling: Vec<NodeId> = (0..n as NodeId).filter(|&u| view.out_degree(u) == 0).collect();
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residuals = Vec::new();

    for _ in 0..cfg.max_iterations {
        let dangling_mass: f64 = dangling.iter().map(|&u| x[u as usize]).sum();
        next.fill((1.0 - d) / nf + d * dangling_mass / nf);
        for u in 0..n as NodeId {
            let share = d * x[u as usize];
            for (&v, &w) in view.successors(u).iter().zip(weights.row(view, u)) {
                next[v as usize] += share * w;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|value| *value /= total);
        let residual: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        residuals.push(residual);
        if residual < cfg.tolerance {
            break;
        }
    }
    let residual = *residuals.last().expect("at least one sweep");
    ImportanceVector {
        values: x,
        iterations: residuals.len(),
        residual,
        converged: residual < cfg.tolerance,
        residuals,
    }
}

/// Rank vector and credibility scores of one community.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityRank {
    pub community: u32,
    /// Parent ids, aligned with `io` and `importance.values`.
    pub members: Vec<NodeId>,
    pub io: Vec<f64>,
    pub importance: ImportanceVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityRanks {
    /// One entry per community, in community-id order.
    pub communities: Vec<CommunityRank>,
    /// Members scored from local degrees because profile counts were missing.
    pub io_fallbacks: usize,
}

impl CommunityRanks {
    pub fn nonconverged(&self) -> impl Iterator<Item = &CommunityRank> {
        self.communities.iter().filter(|c| !c.importance.converged)
    }
}

/// Ranks every community of `p` independently, in parallel. Credibility
/// comes from `counts` when given, else from local degrees.
pub fn rank_all_communities(
    g: &DirectedGraph,
    p: &Partition,
    cfg: &RankConfig,
    counts: Option<&[FollowCounts]>,
) -> Result<CommunityRanks, RankError> {
    cfg.validate()?;
    let views = community_views(g, p)?;
    let ranked: Vec<(CommunityRank, usize)> = views
        .par_iter()
        .enumerate()
        .map(|(community, view)| {
            let (io, fallbacks) = io_scores_for(view, counts);
            let importance = pagerank(view, cfg, Some(&io))?;
            Ok((
                CommunityRank { community: community as u32, members: view.members().to_vec(), io: io.0, importance },
                fallbacks,
            ))
        })
        .collect::<Result<_, RankError>>()?;
    let io_fallbacks = ranked.iter().map(|r| r.1).sum();
    if io_fallbacks > 0 {
        log::warn!("{io_fallbacks} account(s) lacked profile counts; scored from community degrees");
    }
    Ok(CommunityRanks { communities: ranked.into_iter().map(|r| r.0).collect(), io_fallbacks })
}

//! Non-overlapping community detection.
//!
//! Communities are found on the symmetrized follower graph with Louvain and
//! then applied back to the directed graph, where ranking keeps arc
//! directions.

mod louvain;
mod modularity;

pub use louvain::{louvain, Dendrogram, Level, LouvainConfig, MoveState};
pub use modularity::{modularity, ModularityVariant};

use thiserror::Error;

use crate::graph::{DirectedGraph, NodeId, SubgraphView};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommunityError {
    #[error("partition covers {partition} nodes but the graph has {graph}")]
    SizeMismatch { partition: usize, graph: usize },
    #[error("community ids are not dense: id {0} has no members")]
    EmptyCommunity(u32),
    #[error("invalid Louvain configuration: {0}")]
    InvalidConfig(String),
}

/// Assignment of every node to exactly one community, ids dense in `[0, C)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<u32>,
    members: Vec<Vec<NodeId>>,
}

impl Partition {
    /// Wraps an assignment whose ids must already be dense.
    pub fn new(assignment: Vec<u32>) -> Result<Self, CommunityError> {
        let count = assignment.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut members = vec![Vec::new(); count];
        for (node, &c) in assignment.iter().enumerate() {
            members[c as usize].push(node as NodeId);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(CommunityError::EmptyCommunity(empty as u32));
        }
        Ok(Partition { assignment, members })
    }

    /// Relabels arbitrary ids densely, numbering communities in order of
    /// their smallest member.
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|label| {
                let next = map.len() as u32;
                *map.entry(*label).or_insert(next)
            })
            .collect();
        Partition::new(assignment).expect("relabelled ids are dense")
    }

    /// Every node in its own community.
    pub fn singletons(node_count: usize) -> Self {
        Partition::new((0..node_count as u32).collect()).expect("dense")
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.members.len()
    }

    pub fn community_of(&self, node: NodeId) -> u32 {
        self.assignment[node as usize]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Sorted members of community `c`.
    pub fn members(&self, c: u32) -> &[NodeId] {
        &self.members[c as usize]
    }

    pub fn communities(&self) -> impl Iterator<Item = (u32, &[NodeId])> {
        self.members.iter().enumerate().map(|(c, m)| (c as u32, m.as_slice()))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

/// One induced directed subgraph per community, in community-id order.
pub fn community_views<'g>(
    g: &'g DirectedGraph,
    p: &Partition,
) -> Result<Vec<SubgraphView<'g>>, CommunityError> {
    if p.node_count() != g.node_count() {
        return Err(CommunityError::SizeMismatch { partition: p.node_count(), graph: g.node_count() });
    }
    let mut local_index = vec![0 as NodeId; g.node_count()];
    for (_, members) in p.communities() {
        for (local, &v) in members.iter().enumerate() {
            local_index[v as usize] = local as NodeId;
        }
    }
    Ok(p.communities()
        .map(|(_, members)| {
            SubgraphView::with_local_index(g, members.to_vec(), p.assignment(), &local_index)
        })
        .collect())
}

//! Immutable directed and undirected graph storage.
//!
//! Both graph types keep their adjacency in offset-indexed arrays: the
//! neighbours of node `u` live in `targets[offsets[u]..offsets[u + 1]]`.
//! Node ids are dense `u32` indices in `[0, node_count)`.

use std::fmt;

use thiserror::Error;

/// Dense node index in `[0, node_count)`.
pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("arc #{index} ({tail} -> {head}) has an endpoint outside [0, {node_count})")]
    EndpointOutOfRange {
        index: usize,
        tail: NodeId,
        head: NodeId,
        node_count: usize,
    },
    #[error("node count {0} does not fit in a 32-bit node id")]
    TooManyNodes(usize),
    #[error("induced subgraph needs at least one member")]
    EmptyMemberSet,
    #[error("member {member} is outside [0, {node_count})")]
    MemberOutOfRange { member: NodeId, node_count: usize },
}

/// One input arc `source -> target`. A set `reciprocal` flag also
/// materializes `target -> source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputArc {
    pub source: NodeId,
    pub target: NodeId,
    pub reciprocal: bool,
}

impl InputArc {
    pub fn new(source: NodeId, target: NodeId, reciprocal: bool) -> Self {
        InputArc { source, target, reciprocal }
    }
}

/// Tally of input arcs discarded while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Compressed adjacency for one direction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Adjacency {
    /// Builds sorted rows from `(row, col)` pairs that are already
    /// duplicate-free. Counting sort keeps this linear in the arc count.
    fn from_pairs(node_count: usize, pairs: impl Iterator<Item = (NodeId, NodeId)> + Clone) -> Self {
        let mut offsets = vec![0usize; node_count + 1];
        for (row, _) in pairs.clone() {
            offsets[row as usize + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0; offsets[node_count]];
        for (row, col) in pairs {
            let slot = &mut cursor[row as usize];
            targets[*slot] = col;
            *slot += 1;
        }
        for i in 0..node_count {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Adjacency { offsets, targets }
    }

    #[inline]
    fn row(&self, u: NodeId) -> &[NodeId] {
        let u = u as usize;
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    fn transpose(&self, node_count: usize) -> Self {
        let pairs = (0..node_count as NodeId)
            .flat_map(move |u| self.row(u).iter().map(move |&v| (v, u)));
        Adjacency::from_pairs(node_count, pairs)
    }
}

/// Immutable simple digraph: no self-loops, no parallel arcs.
#[derive(Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    node_count: usize,
    out: Adjacency,
    inc: Adjacency,
}

impl fmt::Debug for DirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirectedGraph")
            .field("node_count", &self.node_count)
            .field("edge_count", &self.edge_count())
            .finish()
    }
}

/// Builds a [`DirectedGraph`] from an arc list.
///
/// Self-loops and repeated arcs are dropped and tallied in the returned
/// [`BuildStats`]. An arc flagged reciprocal also adds its reverse; a reverse
/// arc that is already present is not counted as a duplicate.
pub fn build_graph(arcs: &[InputArc], node_count: usize) -> Result<(DirectedGraph, BuildStats), GraphError> {
    if node_count > NodeId::MAX as usize {
        return Err(GraphError::TooManyNodes(node_count));
    }
    let mut stats = BuildStats::default();
    let mut explicit = Vec::with_capacity(arcs.len());
    for (index, arc) in arcs.iter().enumerate() {
        if arc.source as usize >= node_count || arc.target as usize >= node_count {
            return Err(GraphError::EndpointOutOfRange {
                index,
                tail: arc.source,
                head: arc.target,
                node_count,
            });
        }
        if arc.source == arc.target {
            stats.self_loops += 1;
            continue;
        }
        explicit.push((arc.source, arc.target));
    }
    explicit.sort_unstable();
    let before = explicit.len();
    explicit.dedup();
    stats.duplicates = before - explicit.len();

    let mut all = explicit;
    all.extend(
        arcs.iter()
            .filter(|a| a.reciprocal && a.source != a.target)
            .map(|a| (a.target, a.source)),
    );
    all.sort_unstable();
    all.dedup();

    if stats.self_loops > 0 || stats.duplicates > 0 {
        log::warn!(
            "dropped {} self-loop(s) and {} duplicate arc(s)",
            stats.self_loops,
            stats.duplicates
        );
    }
    Ok((DirectedGraph::from_sorted_unique(node_count, &all), stats))
}

impl DirectedGraph {
    /// `arcs` must be sorted, duplicate-free and loop-free.
    pub(crate) fn from_sorted_unique(node_count: usize, arcs: &[(NodeId, NodeId)]) -> Self {
        let out = Adjacency::from_pairs(node_count, arcs.iter().copied());
        let inc = out.transpose(node_count);
        DirectedGraph { node_count, out, inc }
    }

    /// Assembles a graph from already-sorted successor rows. Used by the
    /// cache loader, which validates the rows itself.
    pub(crate) fn from_out_rows(node_count: usize, offsets: Vec<usize>, targets: Vec<NodeId>) -> Self {
        let out = Adjacency { offsets, targets };
        let inc = out.transpose(node_count);
        DirectedGraph { node_count, out, inc }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of arcs `M`.
    pub fn edge_count(&self) -> usize {
        self.out.targets.len()
    }

    /// Sorted successors (followees) of `u`.
    pub fn successors(&self, u: NodeId) -> &[NodeId] {
        self.out.row(u)
    }

    /// Sorted predecessors (fans) of `u`.
    pub fn predecessors(&self, u: NodeId) -> &[NodeId] {
        self.inc.row(u)
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.successors(u).len()
    }

    pub fn in_degree(&self, u: NodeId) -> usize {
        self.predecessors(u).len()
    }

    /// `(in_degree, out_degree)` of `u`.
    pub fn degrees(&self, u: NodeId) -> (usize, usize) {
        (self.in_degree(u), self.out_degree(u))
    }

    pub fn has_arc(&self, u: NodeId, v: NodeId) -> bool {
        self.successors(u).binary_search(&v).is_ok()
    }

    /// Whether `u -> v` is one half of a mutual follow.
    pub fn is_reciprocal(&self, u: NodeId, v: NodeId) -> bool {
        self.has_arc(u, v) && self.has_arc(v, u)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.node_count as NodeId
    }

    /// All arcs in `(source, target)` lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    /// Arc list in the form accepted by [`build_graph`], with reciprocal
    /// flags set on both halves of every mutual pair.
    pub fn to_arcs(&self) -> Vec<InputArc> {
        self.arcs()
            .map(|(u, v)| InputArc::new(u, v, self.has_arc(v, u)))
            .collect()
    }
}

/// Symmetric weighted graph, stored as the rows of its adjacency matrix.
///
/// The row of `u` lists `(v, A_uv)` for every nonzero entry, sorted by `v`.
/// A diagonal entry `A_uu` appears once and counts once toward the degree
/// `k_u = Σ_v A_uv`, so `2m = Σ_u k_u`. Aggregating a community therefore
/// stores twice its internal edge weight on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    two_m: f64,
}

impl UndirectedGraph {
    /// Builds from matrix entries `(u, v, w)`. Each off-diagonal entry must be
    /// given in both orientations; repeated entries are summed.
    pub fn from_entries(node_count: usize, mut entries: Vec<(NodeId, NodeId, f64)>) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(NodeId, NodeId, f64)> = Vec::with_capacity(entries.len());
        for (u, v, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => merged.push((u, v, w)),
            }
        }
        let mut offsets = vec![0usize; node_count + 1];
        for &(u, _, _) in &merged {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        let neighbors: Vec<NodeId> = merged.iter().map(|e| e.1).collect();
        let weights: Vec<f64> = merged.iter().map(|e| e.2).collect();
        let degrees: Vec<f64> = (0..node_count)
            .map(|u| weights[offsets[u]..offsets[u + 1]].iter().sum())
            .collect();
        let two_m = degrees.iter().sum();
        UndirectedGraph { offsets, neighbors, weights, degrees, two_m }
    }

    /// Unweighted simple graph from undirected edges `{u, v}`, `u != v`.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let entries = edges
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)])
            .collect();
        Self::from_entries(node_count, entries)
    }

    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Nonzero matrix entries on or above the diagonal.
    pub fn edge_count(&self) -> usize {
        (0..self.node_count() as NodeId)
            .map(|u| self.neighbors(u).filter(|&(v, _)| v >= u).count())
            .sum()
    }

    pub fn neighbors(&self, u: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let range = self.offsets[u as usize]..self.offsets[u as usize + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// `A_uv` (zero when absent).
    pub fn weight(&self, u: NodeId, v: NodeId) -> f64 {
        let range = self.offsets[u as usize]..self.offsets[u as usize + 1];
        match self.neighbors[range.clone()].binary_search(&v) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Weighted degree `k_u`.
    pub fn degree(&self, u: NodeId) -> f64 {
        self.degrees[u as usize]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Total edge weight `m`.
    pub fn total_weight(&self) -> f64 {
        self.two_m / 2.0
    }

    /// `2m`, the sum of every matrix entry.
    pub fn two_m(&self) -> f64 {
        self.two_m
    }
}

/// Undirected view of a follower graph: any arc in either direction becomes
/// one weight-1 edge, so a mutual follow counts once.
pub fn symmetrize(g: &DirectedGraph) -> UndirectedGraph {
    let mut entries = Vec::with_capacity(2 * g.edge_count());
    for (u, v) in g.arcs() {
        // A mutual pair is visited twice; emit it from the smaller endpoint only.
        if u < v || !g.has_arc(v, u) {
            entries.push((u, v, 1.0));
            entries.push((v, u, 1.0));
        }
    }
    UndirectedGraph::from_entries(g.node_count(), entries)
}

/// Directed subgraph induced by a member set, with dense local ids.
///
/// Local id `i` corresponds to `members()[i]`; members are sorted, so the
/// mapping preserves parent order.
#[derive(Debug, Clone)]
pub struct SubgraphView<'g> {
    parent: &'g DirectedGraph,
    members: Vec<NodeId>,
    out: Adjacency,
    inc: Adjacency,
}

impl<'g> SubgraphView<'g> {
    /// Induced subgraph on `members` (deduplicated and sorted here).
    pub fn new(parent: &'g DirectedGraph, members: impl IntoIterator<Item = NodeId>) -> Result<Self, GraphError> {
        let mut members: Vec<NodeId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(GraphError::EmptyMemberSet);
        }
        if let Some(&member) = members.iter().find(|&&m| m as usize >= parent.node_count()) {
            return Err(GraphError::MemberOutOfRange { member, node_count: parent.node_count() });
        }
        let lookup = |v: NodeId| members.binary_search(&v).ok().map(|l| l as NodeId);
        Ok(Self::assemble(parent, &members, lookup))
    }

    /// `local_index[v]` gives the local id of `v` within its own group.
    /// Callers guarantee `members` is sorted, nonempty and in range.
    pub(crate) fn with_local_index(
        parent: &'g DirectedGraph,
        members: Vec<NodeId>,
        group_of: &[u32],
        local_index: &[NodeId],
    ) -> Self {
        let group = group_of[members[0] as usize];
        let lookup = |v: NodeId| (group_of[v as usize] == group).then(|| local_index[v as usize]);
        Self::assemble(parent, &members, lookup)
    }

    fn assemble(parent: &'g DirectedGraph, members: &[NodeId], lookup: impl Fn(NodeId) -> Option<NodeId>) -> Self {
        let mut pairs = Vec::new();
        for (local, &u) in members.iter().enumerate() {
            for &v in parent.successors(u) {
                if let Some(lv) = lookup(v) {
                    pairs.push((local as NodeId, lv));
                }
            }
        }
        let n = members.len();
        let out = Adjacency::from_pairs(n, pairs.iter().copied());
        let inc = out.transpose(n);
        SubgraphView { parent, members: members.to_vec(), out, inc }
    }

    pub fn parent(&self) -> &'g DirectedGraph {
        self.parent
    }

    pub fn node_count(&self) -> usize {
        self.members.len()
    }

    pub fn arc_count(&self) -> usize {
        self.out.targets.len()
    }

    /// Parent ids, indexed by local id.
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn parent_id(&self, local: NodeId) -> NodeId {
        self.members[local as usize]
    }

    pub fn local_id(&self, parent: NodeId) -> Option<NodeId> {
        self.members.binary_search(&parent).ok().map(|l| l as NodeId)
    }

    pub fn successors(&self, local: NodeId) -> &[NodeId] {
        self.out.row(local)
    }

    pub fn predecessors(&self, local: NodeId) -> &[NodeId] {
        self.inc.row(local)
    }

    pub fn out_degree(&self, local: NodeId) -> usize {
        self.successors(local).len()
    }

    pub fn in_degree(&self, local: NodeId) -> usize {
        self.predecessors(local).len()
    }

    /// Range of `local`'s arcs in the flat out-adjacency; weights aligned
    /// with the out-adjacency are indexed by it.
    pub fn out_range(&self, local: NodeId) -> std::ops::Range<usize> {
        self.out.offsets[local as usize]..self.out.offsets[local as usize + 1]
    }

    /// Local arcs in `(source, target)` order.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId)
            .flat_map(move |u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    /// Local arcs translated back to parent ids.
    pub fn parent_arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.arcs().map(|(u, v)| (self.parent_id(u), self.parent_id(v)))
    }
}

/// Induced subgraph of `g` on `members`.
pub fn induced_subgraph<'g>(
    g: &'g DirectedGraph,
    members: impl IntoIterator<Item = NodeId>,
) -> Result<SubgraphView<'g>, GraphError> {
    SubgraphView::new(g, members)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(arcs: &[(NodeId, NodeId, bool)], n: usize) -> (DirectedGraph, BuildStats) {
        let arcs: Vec<InputArc> = arcs.iter().map(|&(s, t, r)| InputArc::new(s, t, r)).collect();
        build_graph(&arcs, n).unwrap()
    }

    #[test]
    fn two_cycle() {
        let (g, stats) = graph(&[(0, 1, false), (1, 0, false)], 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degrees(0), (1, 1));
        assert_eq!(stats, BuildStats::default());
        assert!(g.is_reciprocal(0, 1));
    }

    #[test]
    fn self_loop_dropped() {
        let (g, stats) = graph(&[(0, 0, false)], 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(stats.self_loops, 1);
    }

    #[test]
    fn reciprocal_flag_materializes_reverse() {
        let (g, stats) = graph(&[(0, 1, true)], 2);
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_arc(1, 0));
        assert_eq!(stats.duplicates, 0);
    }

    #[test]
    fn duplicates_are_counted() {
        let (g, stats) = graph(&[(0, 1, false), (0, 1, false), (0, 1, true), (1, 0, true)], 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(stats.duplicates, 2);
    }

    #[test]
    fn out_of_range_names_arc() {
        let err = build_graph(&[InputArc::new(0, 1, false), InputArc::new(2, 0, false)], 2).unwrap_err();
        assert_eq!(
            err,
            GraphError::EndpointOutOfRange { index: 1, tail: 2, head: 0, node_count: 2 }
        );
        assert!(err.to_string().contains("arc #1"));
    }

    #[test]
    fn star_degrees() {
        let arcs: Vec<_> = (1..=5).map(|u| (u, 0, false)).collect();
        let (g, _) = graph(&arcs, 6);
        assert_eq!(g.degrees(0), (5, 0));
        assert_eq!(g.predecessors(0), &[1, 2, 3, 4, 5]);
    }

    #[test]
    fn symmetrize_collapses_mutual_pair() {
        let (g, _) = graph(&[(0, 1, false), (1, 0, false)], 2);
        let u = symmetrize(&g);
        assert_eq!(u.total_weight(), 1.0);
        assert_eq!(u.weight(0, 1), 1.0);
        assert_eq!(u.edge_count(), 1);

        let (g, _) = graph(&[(0, 1, false)], 2);
        let u = symmetrize(&g);
        assert_eq!(u.total_weight(), 1.0);
        assert_eq!(u.weight(1, 0), 1.0);
    }

    #[test]
    fn symmetrize_directed_triangle() {
        let (g, _) = graph(&[(0, 1, false), (1, 2, false), (2, 0, false)], 3);
        let u = symmetrize(&g);
        assert_eq!(u.total_weight(), 3.0);
        assert_eq!(u.edge_count(), 3);
        for v in 0..3 {
            assert_eq!(u.degree(v), 2.0);
        }
    }

    #[test]
    fn subgraph_of_triangle_pair() {
        let (g, _) = graph(&[(0, 1, false), (1, 0, false), (1, 2, false), (2, 0, false)], 3);
        let view = induced_subgraph(&g, [0, 1]).unwrap();
        assert_eq!(view.node_count(), 2);
        assert_eq!(view.arc_count(), 2);
        assert_eq!(view.parent_id(1), 1);
        assert_eq!(view.local_id(2), None);
    }

    #[test]
    fn subgraph_rejects_empty_and_out_of_range() {
        let (g, _) = graph(&[(0, 1, false)], 2);
        assert_eq!(induced_subgraph(&g, []).unwrap_err(), GraphError::EmptyMemberSet);
        assert!(matches!(
            induced_subgraph(&g, [5]).unwrap_err(),
            GraphError::MemberOutOfRange { member: 5, .. }
        ));
    }

    #[test]
    fn aggregated_self_loop_counts_once_in_degree() {
        let u = UndirectedGraph::from_entries(2, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(u.degree(0), 5.0);
        assert_eq!(u.degree(1), 1.0);
        assert_eq!(u.two_m(), 6.0);
        assert_eq!(u.edge_count(), 2);
    }
}

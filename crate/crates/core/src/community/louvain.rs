use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{modularity, CommunityError, ModularityVariant, Partition};
use crate::graph::{NodeId, UndirectedGraph};

/// Safety cap on local-moving passes within one level.
const MAX_PASSES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LouvainConfig {
    /// Upper bound on aggregation levels.
    pub max_iterations: usize,
    /// A level whose modularity improvement falls below this ends the run.
    pub min_gain: f64,
    /// Seed for the per-level node sweep order.
    pub seed: u64,
    pub resolution: f64,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig { max_iterations: 100, min_gain: 1e-7, seed: 0, resolution: 1.0 }
    }
}

impl LouvainConfig {
    pub fn validate(&self) -> Result<(), CommunityError> {
        if self.max_iterations < 1 {
            return Err(CommunityError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.min_gain >= 0.0) {
            return Err(CommunityError::InvalidConfig(format!("min_gain must be >= 0, got {}", self.min_gain)));
        }
        if !(self.resolution > 0.0) {
            return Err(CommunityError::InvalidConfig(format!("resolution must be > 0, got {}", self.resolution)));
        }
        Ok(())
    }
}

/// One aggregation level of a Louvain run.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    /// Nodes of the graph this level partitioned.
    pub node_count: usize,
    /// Nonzero upper-triangle entries of that graph, self-loops included.
    pub edge_count: usize,
    pub total_weight: f64,
    /// Community of every node of this level's graph; these communities are
    /// the nodes of the next level.
    pub assignment: Vec<u32>,
    pub community_count: usize,
    /// Standard modularity after this level.
    pub modularity: f64,
    pub moves: usize,
    /// Smallest modularity gain among accepted moves.
    pub min_accepted_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub levels: Vec<Level>,
    /// Final communities on the original nodes.
    pub partition: Partition,
    /// Standard modularity of `partition`.
    pub modularity: f64,
    /// Standard modularity of the all-singleton partition.
    pub initial_modularity: f64,
}

impl Dendrogram {
    /// Flattened assignment after the first `depth` levels, composed from
    /// the per-level assignments.
    pub fn flatten(&self, depth: usize, node_count: usize) -> Vec<u32> {
        let mut labels: Vec<u32> = (0..node_count as u32).collect();
        for level in &self.levels[..depth] {
            for label in labels.iter_mut() {
                *label = level.assignment[*label as usize];
            }
        }
        labels
    }
}

/// Running state of local moving: the current assignment of a graph's nodes
/// and the degree total `Σ_tot` of every community.
#[derive(Debug, Clone)]
pub struct MoveState<'g> {
    graph: &'g UndirectedGraph,
    community: Vec<u32>,
    sigma_tot: Vec<f64>,
    resolution: f64,
    scratch: Vec<f64>,
    touched: Vec<u32>,
}

impl<'g> MoveState<'g> {
    /// Every node in its own community.
    pub fn new(graph: &'g UndirectedGraph) -> Self {
        let n = graph.node_count();
        Self::from_assignment(graph, (0..n as u32).collect())
    }

    /// Starts from `assignment`; ids must be `< node_count`.
    pub fn from_assignment(graph: &'g UndirectedGraph, assignment: Vec<u32>) -> Self {
        let n = graph.node_count();
        assert_eq!(assignment.len(), n, "assignment length must match the graph");
        let mut sigma_tot = vec![0.0; n];
        for (i, &c) in assignment.iter().enumerate() {
            sigma_tot[c as usize] += graph.degree(i as NodeId);
        }
        MoveState {
            graph,
            community: assignment,
            sigma_tot,
            resolution: 1.0,
            scratch: vec![0.0; n],
            touched: Vec::new(),
        }
    }

    fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn assignment(&self) -> &[u32] {
        &self.community
    }

    pub fn community_of(&self, i: NodeId) -> u32 {
        self.community[i as usize]
    }

    /// `Σ_tot` of community `c`.
    pub fn community_degree(&self, c: u32) -> f64 {
        self.sigma_tot[c as usize]
    }

    /// `k_{i,c}`: weight from `i` to the other members of `c`.
    pub fn links_to(&self, i: NodeId, c: u32) -> f64 {
        self.graph
            .neighbors(i)
            .filter(|&(j, _)| j != i && self.community[j as usize] == c)
            .map(|(_, w)| w)
            .sum()
    }

    /// Modularity change from inserting `i`, taken out of its community
    /// first, into `c`:
    ///
    /// `ΔQ = k_{i,c}/m − Σ_tot(c)·k_i / (2m²)`
    ///
    /// where `Σ_tot(c)` excludes `i`.
    pub fn insertion_gain(&self, i: NodeId, c: u32) -> f64 {
        self.gain_with(i, c, self.links_to(i, c))
    }

    /// Modularity change from moving `i` from its community into `c`.
    pub fn move_gain(&self, i: NodeId, c: u32) -> f64 {
        let own = self.community_of(i);
        if own == c {
            return 0.0;
        }
        self.insertion_gain(i, c) - self.insertion_gain(i, own)
    }

    fn gain_with(&self, i: NodeId, c: u32, links: f64) -> f64 {
        let m = self.graph.total_weight();
        if m == 0.0 {
            return 0.0;
        }
        let k_i = self.graph.degree(i);
        let mut tot = self.sigma_tot[c as usize];
        if self.community[i as usize] == c {
            tot -= k_i;
        }
        links / m - self.resolution * tot * k_i / (2.0 * m * m)
    }

    pub fn move_node(&mut self, i: NodeId, c: u32) {
        let k_i = self.graph.degree(i);
        let own = self.community[i as usize];
        self.sigma_tot[own as usize] -= k_i;
        self.sigma_tot[c as usize] += k_i;
        self.community[i as usize] = c;
    }

    /// Weights from `i` to each neighbouring community, sorted by community.
    fn neighbor_communities(&mut self, i: NodeId) -> Vec<(u32, f64)> {
        for (j, w) in self.graph.neighbors(i) {
            if j == i {
                continue;
            }
            let c = self.community[j as usize];
            if self.scratch[c as usize] == 0.0 {
                self.touched.push(c);
            }
            self.scratch[c as usize] += w;
        }
        self.touched.sort_unstable();
        let links = self.touched.iter().map(|&c| (c, self.scratch[c as usize])).collect();
        for &c in &self.touched {
            self.scratch[c as usize] = 0.0;
        }
        self.touched.clear();
        links
    }

    /// Greedy local moving over `order` until a full pass changes nothing.
    /// Returns `(moves, smallest accepted gain)`.
    fn sweep(&mut self, order: &[NodeId]) -> (usize, f64) {
        let mut moves = 0;
        let mut min_gain = f64::INFINITY;
        for _ in 0..MAX_PASSES {
            let mut moved = 0;
            for &i in order {
                let own = self.community_of(i);
                let links = self.neighbor_communities(i);
                let own_links = links.iter().find(|l| l.0 == own).map_or(0.0, |l| l.1);
                let own_gain = self.gain_with(i, own, own_links);
                // Ties keep the current community, then favour the smallest id.
                let mut best = (own, own_gain);
                for &(c, w) in &links {
                    if c == own {
                        continue;
                    }
                    let gain = self.gain_with(i, c, w);
                    if gain > best.1 {
                        best = (c, gain);
                    }
                }
                if best.0 != own {
                    debug_assert!(best.1 - own_gain > 0.0);
                    min_gain = min_gain.min(best.1 - own_gain);
                    self.move_node(i, best.0);
                    moved += 1;
                }
            }
            moves += moved;
            if moved == 0 {
                return (moves, min_gain);
            }
        }
        log::warn!("local moving stopped after {MAX_PASSES} passes without settling");
        (moves, min_gain)
    }
}

/// Collapses every community of `p` into one node. Inter-community weights
/// are summed; the internal weight of a community lands on its diagonal.
fn aggregate(g: &UndirectedGraph, p: &Partition) -> UndirectedGraph {
    let mut entries = Vec::new();
    for i in 0..g.node_count() as NodeId {
        let ci = p.community_of(i);
        entries.extend(g.neighbors(i).map(|(j, w)| (ci, p.community_of(j), w)));
    }
    UndirectedGraph::from_entries(p.community_count(), entries)
}

/// Multi-level Louvain modularity optimization.
///
/// Each level sweeps the nodes of the current graph in a seeded random order,
/// moving every node to the neighbouring community with the largest positive
/// gain until nothing moves, then aggregates communities into nodes. The run
/// ends when a level moves nothing, improves modularity by less than
/// `cfg.min_gain`, or `cfg.max_iterations` levels have run.
pub fn louvain(g: &UndirectedGraph, cfg: &LouvainConfig) -> Result<Dendrogram, CommunityError> {
    cfg.validate()?;
    let n = g.node_count();
    if n == 0 {
        return Err(CommunityError::InvalidConfig("graph has no nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial_modularity = modularity(g, &Partition::singletons(n), ModularityVariant::Standard)?;

    let mut flat: Vec<u32> = (0..n as u32).collect();
    let mut quality = initial_modularity;
    let mut levels = Vec::new();
    let mut current = g.clone();

    for _ in 0..cfg.max_iterations {
        let mut order: Vec<NodeId> = (0..current.node_count() as NodeId).collect();
        order.shuffle(&mut rng);
        let mut state = MoveState::new(&current).with_resolution(cfg.resolution);
        let (moves, min_accepted_gain) = state.sweep(&order);
        if moves == 0 {
            break;
        }
        let level_partition = Partition::from_labels(state.assignment());
        for label in flat.iter_mut() {
            *label = level_partition.community_of(*label);
        }
        let level_quality = modularity(&current, &level_partition, ModularityVariant::Standard)?;
        let improvement = level_quality - quality;
        levels.push(Level {
            node_count: current.node_count(),
            edge_count: current.edge_count(),
            total_weight: current.total_weight(),
            assignment: level_partition.assignment().to_vec(),
            community_count: level_partition.community_count(),
            modularity: level_quality,
            moves,
            min_accepted_gain,
        });
        quality = level_quality;
        current = aggregate(&current, &level_partition);
        if improvement < cfg.min_gain {
            break;
        }
    }

    Ok(Dendrogram {
        levels,
        partition: Partition::new(flat).expect("composed level labels are dense"),
        modularity: quality,
        initial_modularity,
    })
}

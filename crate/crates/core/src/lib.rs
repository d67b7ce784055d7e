//! Fake-follower ("zombie") account detection on directed follower graphs.
//!
//! The pipeline splits a follower graph into communities with Louvain
//! modularity optimization, ranks accounts inside every community with a
//! PageRank whose transition weights favour credible followees, and flags
//! accounts whose rank falls below the community's IQR lower fence.
//!
//! - [`graph`]: compact directed storage, symmetrization, induced subgraphs.
//! - [`ingest`]: `weibo_network` / uidlist / profile parsers and the binary cache.
//! - [`community`]: modularity scoring and Louvain.
//! - [`rank`]: credibility scores, transition weights, per-community PageRank.
//! - [`detect`]: quartiles, IQR thresholds, zombie labelling.
//! - [`evaluate`]: confusion matrix, metrics, descriptive statistics.
//! - [`synth`]: planted-partition corpora with injected zombies.

pub mod community;
pub mod detect;
pub mod evaluate;
pub mod graph;
pub mod ingest;
pub mod rank;
pub mod synth;

pub use community::{louvain, modularity, Dendrogram, LouvainConfig, ModularityVariant, Partition};
pub use detect::{detect_zombies, iqr_threshold, quartiles, DetectConfig, Label, QuartileMethod, ZombieReport};
pub use evaluate::{confusion, metrics, ConfusionMatrix, MetricSet};
pub use graph::{build_graph, symmetrize, InputArc, DirectedGraph, NodeId, SubgraphView, UndirectedGraph};
pub use rank::{io_score, pagerank, rank_all_communities, ImportanceVector, IoSource, RankConfig, RankMode};

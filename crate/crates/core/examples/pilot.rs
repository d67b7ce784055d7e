//! Parameter pilot behind the committed test corpora.
//!
//! Sweeps the planted-zombie generator over two intra-block densities and
//! five seeds, and the 4×50 community-recovery corpus over five seeds. The
//! output is kept in `testdata/pilot.txt`:
//!
//! ```text
//! cargo run --release -p zombierank-core --example pilot > testdata/pilot.txt
//! ```
//! (timings vary between machines; everything else is deterministic.)

use std::time::Instant;

use zombierank_core::detect::CommunityValues;
use zombierank_core::synth::{generate, SynthConfig};
use zombierank_core::{
    detect_zombies, louvain, rank_all_communities, symmetrize, DetectConfig, LouvainConfig, RankConfig,
};

const SEEDS: [u64; 5] = [7, 42, 1, 2, 3];

fn rand_index(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            agree += usize::from((a[i] == a[j]) == (b[i] == b[j]));
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

fn zombie_sweep() {
    println!("# 5x500 blocks, p_out 0.002, 10% zombies with 20-40 followees and at most 1 follower");
    println!("p_in,seed,arcs,communities,modularity,recall,false_positive_rate,seconds");
    for p_in in [0.03, 0.02] {
        for seed in SEEDS {
            let cfg = SynthConfig {
                block_sizes: vec![500; 5],
                p_in,
                p_out: 0.002,
                reciprocity: 0.5,
                zombie_fraction: 0.1,
                zombie_out_degree: (20, 40),
                zombie_max_in_degree: 1,
                seed,
                ..Default::default()
            };
            let started = Instant::now();
            let corpus = generate(&cfg).unwrap();
            let d = louvain(&symmetrize(&corpus.graph), &LouvainConfig::default()).unwrap();
            let ranks = rank_all_communities(&corpus.graph, &d.partition, &RankConfig::default(), None).unwrap();
            let values: Vec<CommunityValues> = ranks
                .communities
                .iter()
                .map(|r| CommunityValues { community: r.community, nodes: r.members.clone(), values: r.importance.values.clone() })
                .collect();
            let report = detect_zombies(&values, &DetectConfig::default()).unwrap();
            let (mut tp, mut fp) = (0, 0);
            for e in report.entries.iter().filter(|e| e.label.is_zombie()) {
                if corpus.truth.is_zombie[e.node as usize] {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
            let zombies = corpus.truth.zombie_count();
            let normal = corpus.graph.node_count() - zombies;
            println!(
                "{p_in},{seed},{},{},{:.4},{:.4},{:.4},{:.2}",
                corpus.graph.edge_count(),
                d.partition.community_count(),
                d.modularity,
                tp as f64 / zombies as f64,
                fp as f64 / normal as f64,
                started.elapsed().as_secs_f64()
            );
        }
    }
}

fn recovery_sweep() {
    println!("# 4x50 blocks, p_in 0.3, p_out 0.01, no zombies");
    println!("seed,communities,modularity,rand_index");
    for seed in SEEDS {
        let cfg = SynthConfig { block_sizes: vec![50; 4], p_in: 0.3, p_out: 0.01, seed, ..Default::default() };
        let corpus = generate(&cfg).unwrap();
        let d = louvain(&symmetrize(&corpus.graph), &LouvainConfig::default()).unwrap();
        println!(
            "{seed},{},{:.4},{:.4}",
            d.partition.community_count(),
            d.modularity,
            rand_index(d.partition.assignment(), &corpus.truth.block)
        );
    }
}

fn main() {
    zombie_sweep();
    println!();
    recovery_sweep();
}

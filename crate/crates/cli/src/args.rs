use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zombierank_core::{DetectConfig, IoSource, LouvainConfig, QuartileMethod, RankConfig, RankMode};

#[derive(Debug, Parser)]
#[command(name = "zombierank", version, about = "Community-scoped PageRank detection of zombie follower accounts")]
pub struct Cli {
    /// Worker threads for per-community ranking (default: all cores).
    #[arg(long, global = true, env = "ZOMBIERANK_THREADS")]
    pub threads: Option<usize>,
    /// Log progress (-v) or details (-vv) to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a weibo_network file into a binary graph cache.
    Convert {
        network: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        manifest: ManifestOut,
    },
    /// Node and arc counts plus a total-degree histogram.
    Stats {
        cache: PathBuf,
        #[arg(long, default_value_t = 1)]
        bin_width: u64,
        /// Histogram CSV; printed to stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        manifest: ManifestOut,
    },
    /// Louvain communities of the symmetrized graph.
    Communities {
        cache: PathBuf,
        #[command(flatten)]
        louvain: LouvainArgs,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        manifest: ManifestOut,
    },
    /// Credibility-weighted PageRank inside every community.
    Rank {
        cache: PathBuf,
        partition: PathBuf,
        #[command(flatten)]
        rank: RankArgs,
        #[command(flatten)]
        profiles: ProfileArgs,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        manifest: ManifestOut,
    },
    /// Flag accounts below their community's IQR lower fence.
    Detect {
        ranks: PathBuf,
        #[command(flatten)]
        detect: DetectArgs,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        summary: PathBuf,
        #[command(flatten)]
        manifest: ManifestOut,
    },
    /// Confusion matrix and metrics of a report against ground truth.
    Evaluate {
        report: PathBuf,
        truth: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Read the truth file's labels as predictions and vice versa.
        #[arg(long)]
        transpose: bool,
        /// Profile file for the region distribution of flagged accounts.
        #[arg(long)]
        regions: Option<PathBuf>,
        /// Where the region CSV goes (default: regions.csv beside the output).
        #[arg(long, requires = "regions")]
        regions_out: Option<PathBuf>,
        #[arg(long, requires = "regions")]
        uids: Option<PathBuf>,
        #[arg(long, requires = "regions")]
        profile_schema: Option<PathBuf>,
        #[command(flatten)]
        manifest: ManifestOut,
    },
    /// Generate a planted-partition corpus with injected zombies.
    Synth {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run convert, communities, rank and detect (and evaluate when ground
    /// truth is available), writing every intermediate file and a manifest.
    Pipeline {
        /// A weibo_network file, or a directory holding weibo_network.txt and
        /// optionally uidlist.txt, user_profile.csv, profile_schema.json and
        /// truth.csv.
        #[arg(required_unless_present = "replay")]
        input: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Re-run exactly the configuration recorded in a pipeline manifest.
        #[arg(long, conflicts_with = "input")]
        replay: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        transpose: bool,
        #[command(flatten)]
        louvain: LouvainArgs,
        #[command(flatten)]
        rank: RankArgs,
        #[command(flatten)]
        profiles: ProfileArgs,
        #[command(flatten)]
        detect: DetectArgs,
    },
}

#[derive(Debug, Args)]
pub struct ManifestOut {
    /// Also write this stage's run manifest as JSON.
    #[arg(long = "manifest")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LouvainArgs {
    #[arg(long, default_value_t = LouvainConfig::default().seed)]
    pub seed: u64,
    /// Minimum modularity improvement for another level.
    #[arg(long, default_value_t = LouvainConfig::default().min_gain)]
    pub epsilon: f64,
    /// Maximum number of levels.
    #[arg(long = "max-iters", default_value_t = LouvainConfig::default().max_iterations)]
    pub max_levels: usize,
    #[arg(long, default_value_t = LouvainConfig::default().resolution)]
    pub resolution: f64,
}

impl LouvainArgs {
    pub fn config(&self) -> LouvainConfig {
        LouvainConfig {
            max_iterations: self.max_levels,
            min_gain: self.epsilon,
            seed: self.seed,
            resolution: self.resolution,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Even,
    Uneven,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IoSourceArg {
    Local,
    Profile,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long, default_value_t = RankConfig::default().damping)]
    pub damping: f64,
    #[arg(long = "tol", default_value_t = RankConfig::default().tolerance)]
    pub tolerance: f64,
    #[arg(long = "rank-max-iters", default_value_t = RankConfig::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, value_enum, default_value = "uneven")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "local")]
    pub io_source: IoSourceArg,
}

impl RankArgs {
    pub fn config(&self) -> RankConfig {
        RankConfig {
            damping: self.damping,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            mode: match self.mode {
                ModeArg::Even => RankMode::Even,
                ModeArg::Uneven => RankMode::Uneven,
            },
        }
    }

    pub fn io_source(&self) -> IoSource {
        match self.io_source {
            IoSourceArg::Local => IoSource::Local,
            IoSourceArg::Profile => IoSource::Profile,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// User profiles, for `--io-source profile`.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// uid list mapping profile uids to node ids.
    #[arg(long)]
    pub uids: Option<PathBuf>,
    /// JSON profile schema (column order, delimiter, header flag).
    #[arg(long)]
    pub profile_schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, default_value_t = DetectConfig::default().min_size)]
    pub min_size: usize,
    #[arg(long, default_value_t = QuartileMethod::Linear)]
    pub quartile_method: QuartileMethod,
}

impl DetectArgs {
    pub fn config(&self) -> DetectConfig {
        DetectConfig { min_size: self.min_size, method: self.quartile_method }
    }
}

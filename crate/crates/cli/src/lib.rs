//! The `zombierank` command line: one subcommand per pipeline stage plus
//! `pipeline`, which chains them through files and writes a replayable
//! manifest.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 PageRank
//! non-convergence in some community (outputs still written), 4 I/O error.

pub mod args;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod stages;
pub mod tables;

use std::path::Path;

use args::{Cli, Command};
use error::{CliError, Result};
use manifest::StageManifest;
use stages::{ProfileFiles, RegionRequest, StageOutcome};

fn write_manifest(manifest: &StageManifest, path: Option<&Path>) -> Result<()> {
    if let Some(path) = path {
        let mut bytes = serde_json::to_vec_pretty(manifest).expect("manifests serialize");
        bytes.push(b'\n');
        tables::write_atomic(path, &bytes)?;
    }
    Ok(())
}

fn report(outcome: &StageOutcome, manifest_path: Option<&Path>) -> Result<()> {
    for line in &outcome.lines {
        println!("{line}");
    }
    println!("manifest: {}", outcome.manifest.run_id);
    write_manifest(&outcome.manifest, manifest_path)?;
    match outcome.nonconverged {
        0 => Ok(()),
        n => Err(CliError::NonConvergence(n)),
    }
}

/// Runs one parsed command line, printing results to stdout.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("cannot configure {threads} worker threads: {e}")))?;
    }
    match cli.command {
        Command::Convert { network, cache, manifest } => {
            report(&stages::convert(&network, &cache)?, manifest.path.as_deref())
        }
        Command::Stats { cache, bin_width, output, manifest } => {
            report(&stages::stats(&cache, bin_width, output.as_deref())?, manifest.path.as_deref())
        }
        Command::Communities { cache, louvain, output, manifest } => {
            report(&stages::communities(&cache, &louvain.config(), &output)?, manifest.path.as_deref())
        }
        Command::Rank { cache, partition, rank, profiles, output, manifest } => {
            let files = profiles.profiles.map(|p| ProfileFiles { profiles: p, uids: profiles.uids, schema: profiles.profile_schema });
            let outcome = stages::rank(&cache, &partition, &rank.config(), rank.io_source(), files.as_ref(), &output)?;
            report(&outcome, manifest.path.as_deref())
        }
        Command::Detect { ranks, detect, output, summary, manifest } => {
            report(&stages::detect(&ranks, &detect.config(), &output, &summary)?, manifest.path.as_deref())
        }
        Command::Evaluate { report: report_path, truth, output, transpose, regions, regions_out, uids, profile_schema, manifest } => {
            let regions = regions.map(|profiles| RegionRequest {
                out: regions_out.unwrap_or_else(|| output.with_file_name(pipeline::REGIONS_FILE)),
                profiles: ProfileFiles { profiles, uids, schema: profile_schema },
            });
            let outcome = stages::evaluate(&report_path, &truth, transpose, regions.as_ref(), &output)?;
            report(&outcome, manifest.path.as_deref())
        }
        Command::Synth { config, output } => {
            let outcome = stages::synth(&config, &output)?;
            report(&outcome, Some(&output.join(pipeline::MANIFEST_FILE)))
        }
        Command::Pipeline { input, output, replay, truth, transpose, louvain, rank, profiles, detect } => {
            let cfg = match replay {
                Some(manifest) => pipeline::load_for_replay(&manifest)?,
                None => {
                    let input = input.expect("clap requires an input unless replaying");
                    let overrides = pipeline::InputOverrides {
                        uids: profiles.uids,
                        profiles: profiles.profiles,
                        profile_schema: profiles.profile_schema,
                        truth,
                    };
                    let (network, found) = pipeline::resolve_inputs(&input, overrides)?;
                    pipeline::PipelineConfig {
                        network,
                        uids: found.uids,
                        profiles: found.profiles,
                        profile_schema: found.profile_schema,
                        truth: found.truth,
                        louvain: louvain.config(),
                        rank: rank.config(),
                        io_source: rank.io_source(),
                        detect: detect.config(),
                        transpose,
                    }
                }
            };
            let outcome = pipeline::run(&cfg, &output)?;
            for line in &outcome.lines {
                println!("{line}");
            }
            match outcome.nonconverged {
                0 => Ok(()),
                n => Err(CliError::NonConvergence(n)),
            }
        }
    }
}

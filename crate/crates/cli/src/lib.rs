//! `refute` — command-line and HTTP front end for the evidence retrieval
//! and response alignment engine.
//!
//! The binary walks the whole production path: `ingest` raw records into
//! an evidence store, `index` them, `train-retriever` the dense reranker,
//! `train-reward` the feedback classifiers, `sft` then `align` the
//! response policy, and finally answer claims with `respond` (one-shot) or
//! `serve` (HTTP). One TOML file configures everything; flags override it;
//! every command accepts `--seed`.

pub mod args;
pub mod backend;
pub mod commands;
pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod lock;
pub mod service;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::FileConfig;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "refute",
    version,
    about = "Evidence retrieval and response alignment for claim verification",
    propagate_version = true
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// RNG seed for commands that sample; deterministic commands accept
    /// and ignore it.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Artifact directory that default paths resolve under.
    #[arg(long, global = true, value_name = "DIR")]
    pub artifacts: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and deduplicate raw records into an evidence store.
    Ingest(commands::ingest::IngestArgs),
    /// Build the inverted index over an evidence store.
    Index(commands::index::IndexArgs),
    /// Retrieve ranked evidence for a claim.
    Search(commands::search::SearchArgs),
    /// Train the dense reranker on (claim, gold document) pairs.
    TrainRetriever(commands::train_retriever::TrainRetrieverArgs),
    /// Score retrieval quality on held-out pairs.
    EvalRetrieval(commands::eval_retrieval::EvalRetrievalArgs),
    /// Train the feedback classifiers behind the composite reward.
    TrainReward(commands::train_reward::TrainRewardArgs),
    /// Fit a response policy to demonstrations (the frozen reference).
    Sft(commands::sft::SftArgs),
    /// Optimize the policy against the composite reward under a KL leash.
    Align(commands::align::AlignArgs),
    /// Answer one claim end to end and print the scored response.
    Respond(commands::respond::RespondArgs),
    /// Serve /health, /retrieve, and /respond over HTTP.
    Serve(commands::serve::ServeArgs),
}

/// Everything global a command needs: the parsed config file, the seed
/// override, and the artifact directory override.
#[derive(Debug)]
pub struct Ctx {
    pub file: FileConfig,
    pub seed: Option<u64>,
    pub artifacts_flag: Option<PathBuf>,
}

impl Ctx {
    pub fn artifacts_dir(&self) -> PathBuf {
        self.artifacts_flag
            .clone()
            .or_else(|| self.file.paths.artifacts.clone())
            .unwrap_or_else(|| PathBuf::from("artifacts"))
    }

    /// An explicit path wins; otherwise the conventional file under the
    /// artifact directory.
    pub fn artifact_path(&self, flag: &Option<PathBuf>, name: &str) -> PathBuf {
        flag.clone().unwrap_or_else(|| self.artifacts_dir().join(name))
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = config::load(cli.config.as_deref())?;
    let ctx = Ctx { file, seed: cli.seed, artifacts_flag: cli.artifacts };
    match cli.command {
        Command::Ingest(args) => commands::ingest::run(&ctx, args),
        Command::Index(args) => commands::index::run(&ctx, args),
        Command::Search(args) => commands::search::run(&ctx, args),
        Command::TrainRetriever(args) => commands::train_retriever::run(&ctx, args),
        Command::EvalRetrieval(args) => commands::eval_retrieval::run(&ctx, args),
        Command::TrainReward(args) => commands::train_reward::run(&ctx, args),
        Command::Sft(args) => commands::sft::run(&ctx, args),
        Command::Align(args) => commands::align::run(&ctx, args),
        Command::Respond(args) => commands::respond::run(&ctx, args),
        Command::Serve(args) => commands::serve::run(&ctx, args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn every_subcommand_accepts_seed() {
        use clap::CommandFactory;
        let cmd = Cli::command();
        for sub in cmd.get_subcommands() {
            let name = sub.get_name().to_string();
            if name == "help" {
                continue;
            }
            let probe = match name.as_str() {
                "ingest" => vec!["refute", "ingest", "--seed", "7", "--input", "x.jsonl"],
                "search" => vec!["refute", "search", "--seed", "7", "--claim", "x"],
                "respond" => vec!["refute", "respond", "--seed", "7", "--claim", "x"],
                "train-retriever" => {
                    vec!["refute", "train-retriever", "--seed", "7", "--train", "x.jsonl"]
                }
                "eval-retrieval" => {
                    vec!["refute", "eval-retrieval", "--seed", "7", "--eval", "x.jsonl"]
                }
                "train-reward" => vec!["refute", "train-reward", "--seed", "7", "--data", "x.jsonl"],
                "sft" => vec!["refute", "sft", "--seed", "7", "--demos", "x.jsonl"],
                "align" => vec!["refute", "align", "--seed", "7", "--claims", "x.jsonl"],
                _ => vec!["refute", name.as_str(), "--seed", "7"],
            };
            let parsed = Cli::try_parse_from(&probe)
                .unwrap_or_else(|e| panic!("{name} rejected --seed: {e}"));
            assert_eq!(parsed.seed, Some(7), "{name} dropped the seed value");
        }
    }

    #[test]
    fn artifact_paths_resolve_flag_then_file_then_default() {
        let mut ctx = Ctx { file: FileConfig::default(), seed: None, artifacts_flag: None };
        assert_eq!(ctx.artifact_path(&None, "index.bin"), PathBuf::from("artifacts/index.bin"));

        ctx.file.paths.artifacts = Some(PathBuf::from("/data/run1"));
        assert_eq!(ctx.artifact_path(&None, "index.bin"), PathBuf::from("/data/run1/index.bin"));

        ctx.artifacts_flag = Some(PathBuf::from("/tmp/override"));
        assert_eq!(ctx.artifact_path(&None, "index.bin"), PathBuf::from("/tmp/override/index.bin"));

        let explicit = Some(PathBuf::from("/elsewhere/custom.bin"));
        assert_eq!(ctx.artifact_path(&explicit, "index.bin"), PathBuf::from("/elsewhere/custom.bin"));
    }
}

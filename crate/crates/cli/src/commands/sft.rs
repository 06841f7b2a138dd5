//! Supervised fine-tuning: fits a response policy to demonstrations by
//! cross entropy. The result serves as the frozen reference for `align`.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;

use refute_core::policy::{supervised_finetune, Demonstration, PolicyError, SftConfig};
use refute_core::{Policy, PromptTemplate};

use crate::config::{pick, set};
use crate::engine::names;
use crate::error::{data, usage, CliError, CliResult};
use crate::io::{ensure_parent, load_policy, read_jsonl};
use crate::lock::TrainingLock;
use crate::Ctx;

/// Response length cap (tokens) for freshly built policies.
const DEFAULT_MAX_LENGTH: usize = 24;

#[derive(Debug, Args)]
pub struct SftArgs {
    /// Demonstrations as JSON lines: {"claim": ..., "evidence": [...], "response": ...}.
    #[arg(long, value_name = "FILE")]
    pub demos: PathBuf,
    /// Policy checkpoint to write (default: <artifacts>/policy.bin).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Starting policy checkpoint; omitted, a fresh policy is built from
    /// the demonstration vocabulary.
    #[arg(long, value_name = "FILE")]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Response token cap for fresh policies.
    #[arg(long)]
    pub max_length: Option<usize>,
}

pub fn run(ctx: &Ctx, args: SftArgs) -> CliResult<()> {
    let _lock = TrainingLock::acquire(&ctx.artifacts_dir())?;
    let demos: Vec<Demonstration> = read_jsonl(&args.demos, "demonstration")?;

    let policy = match &args.init {
        Some(path) => load_policy(path)?,
        None => {
            let max_length =
                pick(args.max_length, ctx.file.sft.max_length, DEFAULT_MAX_LENGTH);
            Policy::new(infer_vocab(&demos), max_length).map_err(|e| usage(e.to_string()))?
        }
    };

    let mut config = SftConfig::default();
    set(&mut config.epochs, args.epochs, ctx.file.sft.epochs);
    set(&mut config.learning_rate, args.learning_rate, ctx.file.sft.learning_rate);

    let vocab_size = policy.vocab().len();
    let outcome = supervised_finetune(policy, &demos, &PromptTemplate::default(), &config)
        .map_err(policy_error)?;
    let first = outcome.loss_trace.first().copied().unwrap_or(f64::NAN);
    let last = outcome.loss_trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "fine-tuned on {} demonstrations ({} vocabulary tokens): cross entropy {first:.4} -> {last:.4} over {} epochs",
        demos.len(),
        vocab_size,
        outcome.loss_trace.len()
    );

    let out_path = ctx.artifact_path(&args.out, names::POLICY);
    ensure_parent(&out_path)?;
    outcome
        .policy
        .save(&out_path)
        .map_err(|e| data(format!("cannot write policy {}: {e}", out_path.display())))?;
    println!("policy written to {}", out_path.display());
    Ok(())
}

fn policy_error(err: PolicyError) -> CliError {
    match &err {
        PolicyError::BadConfig(_) => usage(err.to_string()),
        _ => data(format!("fine-tuning: {err}")),
    }
}

/// Deterministic starting vocabulary: every response token plus the final
/// token of each claim. The policy conditions its first step on the last
/// prompt word it knows, and rendered prompts end with the claim followed
/// by fixed markup — so including claim tails makes generation
/// prompt-sensitive without hand-writing a vocabulary file.
fn infer_vocab(demos: &[Demonstration]) -> Vec<String> {
    let mut vocab = BTreeSet::new();
    for demo in demos {
        vocab.extend(demo.response.split_whitespace().map(str::to_string));
        if let Some(tail) = demo.claim.split_whitespace().last() {
            vocab.insert(tail.to_string());
        }
    }
    vocab.into_iter().collect()
}

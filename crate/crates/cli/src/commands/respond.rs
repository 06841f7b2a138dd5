//! Answers one claim end to end — retrieve, prompt, generate, score — and
//! prints the full scored counter-response as JSON. This is the same
//! engine call the HTTP service runs for `POST /respond`.

use clap::Args;

use crate::args::{ArtifactArgs, GenerationArgs, RetrievalArgs};
use crate::engine::build_engine;
use crate::error::{data, usage, CliResult};
use crate::Ctx;

#[derive(Debug, Args)]
pub struct RespondArgs {
    /// Claim text to answer.
    #[arg(long, value_name = "TEXT")]
    pub claim: String,
    #[command(flatten)]
    pub artifacts: ArtifactArgs,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    #[command(flatten)]
    pub generation: GenerationArgs,
    /// Scale on the relevance terms of the reward.
    #[arg(long)]
    pub alpha: Option<f64>,
}

pub fn run(ctx: &Ctx, args: RespondArgs) -> CliResult<()> {
    if args.claim.trim().is_empty() {
        return Err(usage("--claim must be non-empty"));
    }
    let engine = build_engine(ctx, &args.artifacts, &args.retrieval, &args.generation, args.alpha)?;
    let counter = engine.respond(&args.claim)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&counter).map_err(|e| data(format!("serialize: {e}")))?
    );
    Ok(())
}

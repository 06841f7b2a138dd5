//! Runs the HTTP service over a fully loaded engine.

use std::sync::Arc;

use clap::Args;

use crate::args::{ArtifactArgs, GenerationArgs, RetrievalArgs};
use crate::config::pick;
use crate::engine::build_engine;
use crate::error::{data, CliResult};
use crate::service;
use crate::Ctx;

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address, e.g. 127.0.0.1:8080 (port 0 picks a free port).
    #[arg(long, value_name = "ADDR")]
    pub addr: Option<String>,
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

pub fn run(ctx: &Ctx, args: ServeArgs) -> CliResult<()> {
    let engine = build_engine(ctx, &args.artifacts, &args.retrieval, &args.generation, args.alpha)?;
    let addr = pick(args.addr.clone(), ctx.file.serve.addr.clone(), DEFAULT_ADDR.to_string());
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| data(format!("cannot start async runtime: {e}")))?;
    runtime.block_on(service::serve(Arc::new(engine), &addr)).map_err(data)
}

//! Retrieves evidence for a claim: lexical candidates reranked by the
//! dense scorer (or the lexical stage alone with `--lexical-only`). The
//! ranked output is exactly what the HTTP service returns from
//! `POST /retrieve` — both run the same two-stage pipeline.

use std::path::PathBuf;

use clap::Args;

use refute_core::lexical::Stage;
use refute_core::{Corpus, ScoredDocument, TwoStagePipeline};

use crate::args::RetrievalArgs;
use crate::engine::{names, resolve_pipeline};
use crate::error::{data, usage, CliResult};
use crate::io::{load_corpus, load_index, load_scorer};
use crate::Ctx;

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Claim text to find evidence for.
    #[arg(long, value_name = "TEXT")]
    pub claim: String,
    /// Evidence store (default: <artifacts>/corpus.store).
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Inverted index (default: <artifacts>/index.bin).
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Dense scorer checkpoint (default: <artifacts>/scorer.bin).
    #[arg(long, value_name = "FILE")]
    pub scorer: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    /// Rank with the lexical stage only, skipping the dense reranker.
    #[arg(long)]
    pub lexical_only: bool,
    /// Print the ranked documents as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn run(ctx: &Ctx, args: SearchArgs) -> CliResult<()> {
    if args.claim.trim().is_empty() {
        return Err(usage("--claim must be non-empty"));
    }
    let config = resolve_pipeline(ctx, &args.retrieval)?;
    let corpus = load_corpus(&ctx.artifact_path(&args.store, names::STORE))?;
    let index = load_index(&ctx.artifact_path(&args.index, names::INDEX))?;

    let documents = if args.lexical_only {
        index.retrieve_top_m(&args.claim, config.k_out, &config.bm25)
    } else {
        let scorer = load_scorer(&ctx.artifact_path(&args.scorer, names::SCORER))?;
        TwoStagePipeline::new(&index, &corpus, &scorer, config)
            .map_err(|e| usage(e.to_string()))?
            .retrieve(&args.claim)
            .map_err(|e| data(e.to_string()))?
    };

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "claim": args.claim,
                "documents": documents,
            }))
            .expect("ranked documents serialize")
        );
    } else if documents.is_empty() {
        println!("no documents matched");
    } else {
        print_table(&documents, &corpus);
    }
    Ok(())
}

fn print_table(documents: &[ScoredDocument], corpus: &Corpus) {
    let id_width = documents.iter().map(|d| d.doc_id.len()).max().unwrap_or(6).max(6);
    println!("{:<4} {:<7} {:>12}  {:<id_width$}  {}", "rank", "stage", "score", "doc_id", "title");
    for (rank, doc) in documents.iter().enumerate() {
        let stage = match doc.stage {
            Stage::Lexical => "lexical",
            Stage::Dense => "dense",
        };
        let title: String = corpus
            .get(&doc.doc_id)
            .map(|d| d.title.chars().take(60).collect())
            .unwrap_or_default();
        println!(
            "{:<4} {:<7} {:>12.6}  {:<id_width$}  {}",
            rank + 1,
            stage,
            doc.score,
            doc.doc_id,
            title
        );
    }
}

//! Builds the inverted index over an evidence store.

use std::path::PathBuf;

use clap::Args;

use refute_core::InvertedIndex;

use crate::engine::names;
use crate::error::{data, CliResult};
use crate::io::{ensure_parent, load_corpus};
use crate::Ctx;

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Evidence store to index (default: <artifacts>/corpus.store).
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Index file to write (default: <artifacts>/index.bin).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print the index summary as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn run(ctx: &Ctx, args: IndexArgs) -> CliResult<()> {
    let store_path = ctx.artifact_path(&args.store, names::STORE);
    let index_path = ctx.artifact_path(&args.out, names::INDEX);

    let corpus = load_corpus(&store_path)?;
    let index = InvertedIndex::build(&corpus)
        .map_err(|e| data(format!("cannot index {}: {e}", store_path.display())))?;
    ensure_parent(&index_path)?;
    index
        .save(&index_path)
        .map_err(|e| data(format!("cannot write index {}: {e}", index_path.display())))?;

    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "documents": index.doc_count(),
                "avg_doc_length": index.avg_doc_length(),
                "index": index_path.display().to_string(),
            })
        );
    } else {
        println!(
            "index written to {} ({} documents, mean length {:.1} tokens)",
            index_path.display(),
            index.doc_count(),
            index.avg_doc_length()
        );
    }
    Ok(())
}

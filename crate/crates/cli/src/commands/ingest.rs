//! Validates and deduplicates raw article records into an evidence store.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;

use refute_core::corpus::ingest;
use refute_core::EvidenceStore;

use crate::engine::names;
use crate::error::{data, CliResult};
use crate::io::ensure_parent;
use crate::Ctx;

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw records as JSON lines; "-" reads standard input.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Evidence store to write (default: <artifacts>/corpus.store).
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Print the ingest report as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn run(ctx: &Ctx, args: IngestArgs) -> CliResult<()> {
    let outcome = if args.input.as_os_str() == "-" {
        ingest(std::io::stdin().lock())
    } else {
        let file = File::open(&args.input)
            .map_err(|e| data(format!("cannot open input {}: {e}", args.input.display())))?;
        ingest(BufReader::new(file))
    }
    .map_err(|e| data(format!("ingest: {e}")))?;

    let report = &outcome.report;
    if report.retained == 0 {
        return Err(data(format!(
            "no usable records in {} ({} invalid, {} duplicates out of {})",
            args.input.display(),
            report.invalid,
            report.duplicates,
            report.total
        )));
    }

    let store_path = ctx.artifact_path(&args.store, names::STORE);
    ensure_parent(&store_path)?;
    EvidenceStore::write(&store_path, &outcome.corpus)
        .map_err(|e| data(format!("cannot write store {}: {e}", store_path.display())))?;

    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "total": report.total,
                "retained": report.retained,
                "invalid": report.invalid,
                "duplicates": report.duplicates,
                "store": store_path.display().to_string(),
            })
        );
    } else {
        println!(
            "ingested {} records: {} retained, {} invalid, {} duplicates",
            report.total, report.retained, report.invalid, report.duplicates
        );
        println!("store written to {} ({} documents)", store_path.display(), outcome.corpus.len());
    }
    Ok(())
}

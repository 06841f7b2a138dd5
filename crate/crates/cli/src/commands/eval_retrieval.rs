//! Scores retrieval quality on held-out (claim, gold document) pairs and
//! prints one metrics row per system: the lexical stage alone and, unless
//! suppressed, the full two-stage pipeline.

use std::path::PathBuf;

use clap::Args;

use refute_core::pipeline::{evaluate_lexical, evaluate_two_stage};
use refute_core::{EvalExample, RankingReport};

use crate::args::RetrievalArgs;
use crate::engine::{names, resolve_pipeline};
use crate::error::{data, CliResult};
use crate::io::{load_corpus, load_index, load_scorer, read_jsonl};
use crate::Ctx;

/// Metric columns in display order (mean over evaluated examples).
const METRIC_COLUMNS: [&str; 5] = ["n@1", "n@3", "n@5", "r@3", "r@5"];

#[derive(Debug, Args)]
pub struct EvalRetrievalArgs {
    /// Evaluation pairs as JSON lines: {"claim": ..., "gold_doc_id": ...}.
    #[arg(long, value_name = "FILE")]
    pub eval: PathBuf,
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
    /// Score the lexical stage only (no scorer needed).
    #[arg(long)]
    pub lexical_only: bool,
    /// Print the reports as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn run(ctx: &Ctx, args: EvalRetrievalArgs) -> CliResult<()> {
    let config = resolve_pipeline(ctx, &args.retrieval)?;
    let corpus = load_corpus(&ctx.artifact_path(&args.store, names::STORE))?;
    let index = load_index(&ctx.artifact_path(&args.index, names::INDEX))?;
    let dataset: Vec<EvalExample> = read_jsonl(&args.eval, "evaluation")?;

    let lexical = evaluate_lexical(&index, &corpus, &dataset, config.m, &config.bm25)
        .map_err(|e| data(format!("lexical evaluation: {e}")))?;

    let two_stage = if args.lexical_only {
        None
    } else {
        let scorer = load_scorer(&ctx.artifact_path(&args.scorer, names::SCORER))?;
        Some(
            evaluate_two_stage(&index, &corpus, &scorer, &dataset, &config)
                .map_err(|e| data(format!("two-stage evaluation: {e}")))?,
        )
    };

    if args.json {
        let mut body = serde_json::json!({ "lexical": lexical });
        if let Some(report) = &two_stage {
            body["two-stage"] = serde_json::to_value(report).expect("report serializes");
        }
        println!("{}", serde_json::to_string_pretty(&body).expect("report serializes"));
    } else {
        let mut rows: Vec<(&str, &RankingReport)> = vec![("lexical", &lexical)];
        if let Some(report) = &two_stage {
            rows.push(("two-stage", report));
        }
        print_ranking_table(&rows);
    }
    Ok(())
}

/// Fixed-width metrics table; missing metrics print as "-".
pub fn print_ranking_table(rows: &[(&str, &RankingReport)]) {
    print!("{:<10}", "system");
    for name in METRIC_COLUMNS {
        print!(" {name:>8}");
    }
    println!(" {:>10} {:>9}", "evaluated", "excluded");
    for (name, report) in rows {
        print!("{name:<10}");
        for metric in METRIC_COLUMNS {
            match report.metrics.get(metric) {
                Some(value) => print!(" {value:>8.3}"),
                None => print!(" {:>8}", "-"),
            }
        }
        println!(" {:>10} {:>9}", report.evaluated, report.excluded);
    }
}

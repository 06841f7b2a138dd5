//! Trains the dense reranker on (claim, gold document) pairs with
//! contrastive pools drawn from the lexical stage, then optionally scores
//! it against the lexical baseline on a held-out set.

use std::path::PathBuf;

use clap::Args;

use refute_core::dense::{train_with_callback, RetrieverTrainConfig};
use refute_core::pipeline::{evaluate_lexical, evaluate_two_stage};
use refute_core::{DenseScorer, EmbeddingConfig, EvalExample, PipelineConfig, RankingReport};

use crate::commands::eval_retrieval::print_ranking_table;
use crate::config::{pick, set};
use crate::engine::names;
use crate::error::{data, usage, CliResult};
use crate::io::{ensure_parent, load_corpus, load_index, read_jsonl};
use crate::lock::TrainingLock;
use crate::Ctx;

#[derive(Debug, Args)]
pub struct TrainRetrieverArgs {
    /// Training pairs as JSON lines: {"claim": ..., "gold_doc_id": ...}.
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    /// Held-out pairs to score after training.
    #[arg(long, value_name = "FILE")]
    pub eval: Option<PathBuf>,
    /// Evidence store (default: <artifacts>/corpus.store).
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Inverted index (default: <artifacts>/index.bin).
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Scorer checkpoint to write (default: <artifacts>/scorer.bin).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Embedding dimension of the fresh scorer.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Cosine temperature of the fresh scorer.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Softmax temperature of the contrastive loss.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Weight of the margin term in the loss.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Positives and negatives sampled per claim.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub warmup_steps: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Stage-1 candidate count for the held-out evaluation.
    #[arg(long)]
    pub m: Option<usize>,
    /// Term-frequency saturation constant of the lexical scorer.
    #[arg(long)]
    pub k1: Option<f64>,
    /// Length-normalization strength of the lexical scorer.
    #[arg(long)]
    pub b: Option<f64>,
}

pub fn run(ctx: &Ctx, args: TrainRetrieverArgs) -> CliResult<()> {
    let _lock = TrainingLock::acquire(&ctx.artifacts_dir())?;

    let corpus = load_corpus(&ctx.artifact_path(&args.store, names::STORE))?;
    let index = load_index(&ctx.artifact_path(&args.index, names::INDEX))?;
    let dataset: Vec<EvalExample> = read_jsonl(&args.train, "training")?;

    let mut embedding = EmbeddingConfig::default();
    set(&mut embedding.dim, args.dim, ctx.file.embedding.dim);
    set(&mut embedding.temperature, args.temperature, ctx.file.embedding.temperature);
    let scorer = DenseScorer::new(embedding).map_err(|e| usage(e.to_string()))?;

    let file = &ctx.file.retriever;
    let mut config = RetrieverTrainConfig::default();
    set(&mut config.tau, args.tau, file.tau);
    set(&mut config.lambda, args.lambda, file.lambda);
    set(&mut config.k, args.k, file.k);
    set(&mut config.epochs, args.epochs, file.epochs);
    set(&mut config.learning_rate, args.learning_rate, file.learning_rate);
    set(&mut config.warmup_steps, args.warmup_steps, file.warmup_steps);
    set(&mut config.weight_decay, args.weight_decay, file.weight_decay);
    set(&mut config.bm25.k1, args.k1, ctx.file.retrieval.k1);
    set(&mut config.bm25.b, args.b, ctx.file.retrieval.b);
    config.seed = pick(ctx.seed, file.seed, config.seed);

    let epochs = config.epochs;
    let outcome = train_with_callback(scorer, &dataset, &corpus, &index, &config, |_, epoch, loss| {
        println!("epoch {:>3}/{epochs}  loss {loss:.6}", epoch + 1);
    })
    .map_err(|e| data(format!("retriever training: {e}")))?;

    let out_path = ctx.artifact_path(&args.out, names::SCORER);
    ensure_parent(&out_path)?;
    outcome
        .scorer
        .save(&out_path)
        .map_err(|e| data(format!("cannot write scorer {}: {e}", out_path.display())))?;
    println!("scorer written to {}", out_path.display());

    if let Some(eval_path) = &args.eval {
        let eval_set: Vec<EvalExample> = read_jsonl(eval_path, "evaluation")?;
        let mut pipeline = PipelineConfig::default();
        set(&mut pipeline.m, args.m, ctx.file.retrieval.m);
        pipeline.bm25 = config.bm25;
        pipeline.validate().map_err(|e| usage(e.to_string()))?;
        let lexical = evaluate_lexical(&index, &corpus, &eval_set, pipeline.m, &pipeline.bm25)
            .map_err(|e| data(format!("lexical evaluation: {e}")))?;
        let reranked =
            evaluate_two_stage(&index, &corpus, &outcome.scorer, &eval_set, &pipeline)
                .map_err(|e| data(format!("two-stage evaluation: {e}")))?;
        let rows: Vec<(&str, &RankingReport)> =
            vec![("lexical", &lexical), ("two-stage", &reranked)];
        print_ranking_table(&rows);
    }
    Ok(())
}

//! Ranking evaluation over (claim, gold-document) pairs, for both the
//! lexical stage alone and the full two-stage pipeline, plus the
//! validation-driven checkpoint selection used when training the scorer.
//!
//! Per-example work is pure, so evaluation fans out across threads; results
//! merge back in input order, making reports independent of scheduling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{ndcg_at_k, recall_at_k};
use super::{PipelineConfig, PipelineError, TwoStagePipeline};
use crate::corpus::Corpus;
use crate::dense::{train_with_callback, DenseScorer, RetrieverTrainConfig};
use crate::lexical::{Bm25Params, InvertedIndex};

/// One labeled evaluation point: a claim and the id of its annotated
/// gold evidence document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalExample {
    pub claim: String,
    pub gold_doc_id: String,
}

/// Where one example's gold document ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleRank {
    /// 1-based rank of the gold within the evaluated ranking.
    Ranked(usize),
    /// The gold never entered the ranking (outside the candidate subset).
    Unranked,
    /// The gold id does not exist in the corpus; excluded from the means.
    Excluded,
}

/// Mean ranking metrics plus the per-example ranks they aggregate.
#[derive(Debug, Clone, Serialize)]
pub struct RankingReport {
    /// Metric name (n@1, n@3, r@3, n@5, r@5) → mean over included examples.
    pub metrics: BTreeMap<String, f64>,
    /// One outcome per input example, in input order.
    pub per_example: Vec<ExampleRank>,
    /// Examples the means aggregate.
    pub evaluated: usize,
    /// Examples whose gold id was missing from the corpus.
    pub excluded: usize,
}

impl RankingReport {
    pub fn metric(&self, name: &str) -> f64 {
        self.metrics[name]
    }
}

/// Spreads `f` over `items` on scoped threads; output order matches input
/// order regardless of scheduling.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(items.len())
        .max(1);
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let chunk_size = items.len().div_ceil(workers);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk_size)
            .map(|chunk| scope.spawn(move || chunk.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    })
}

/// Shared harness: `rank_of` maps a claim to the gold's 1-based rank within
/// some ranking (None = gold absent from it).
fn evaluate_with(
    dataset: &[EvalExample],
    corpus: &Corpus,
    rank_of: impl Fn(&EvalExample) -> Result<Option<usize>, PipelineError> + Sync,
) -> Result<RankingReport, PipelineError> {
    if dataset.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let outcomes = parallel_map(dataset, |example| -> Result<ExampleRank, PipelineError> {
        if !corpus.contains(&example.gold_doc_id) {
            return Ok(ExampleRank::Excluded);
        }
        Ok(match rank_of(example)? {
            Some(rank) => ExampleRank::Ranked(rank),
            None => ExampleRank::Unranked,
        })
    });

    let mut per_example = Vec::with_capacity(dataset.len());
    let mut excluded = 0usize;
    let mut evaluated = 0usize;
    // Keyed in aggregation order: n@1, n@3, r@3, n@5, r@5.
    let mut sums = [0.0f64; 5];
    for outcome in outcomes {
        let outcome = outcome?;
        per_example.push(outcome);
        let rank = match outcome {
            ExampleRank::Excluded => {
                excluded += 1;
                continue;
            }
            ExampleRank::Ranked(rank) => Some(rank),
            ExampleRank::Unranked => None,
        };
        evaluated += 1;
        sums[0] += ndcg_at_k(rank, 1)?;
        sums[1] += ndcg_at_k(rank, 3)?;
        sums[2] += recall_at_k(rank, 3)?;
        sums[3] += ndcg_at_k(rank, 5)?;
        sums[4] += recall_at_k(rank, 5)?;
    }
    if evaluated == 0 {
        return Err(PipelineError::AllExamplesExcluded);
    }

    let denom = evaluated as f64;
    let metrics = BTreeMap::from([
        ("n@1".to_string(), sums[0] / denom),
        ("n@3".to_string(), sums[1] / denom),
        ("r@3".to_string(), sums[2] / denom),
        ("n@5".to_string(), sums[3] / denom),
        ("r@5".to_string(), sums[4] / denom),
    ]);
    Ok(RankingReport { metrics, per_example, evaluated, excluded })
}

/// Grades the full two-stage pipeline. The gold's rank is taken within the
/// dense reranking of the whole stage-1 subset (not just the k_out cut), so
/// a gold that survives stage 1 at rank 9 scores under n@k for k ≥ 9 even
/// when k_out is smaller; a gold outside the subset counts as unranked.
///
/// Reference magnitudes from a full-scale run with a pretrained encoder on
/// real claim data: n@1 ≈ 0.513, n@3 ≈ 0.631, r@5 ≈ 0.750.
pub fn evaluate_two_stage(
    index: &InvertedIndex,
    corpus: &Corpus,
    scorer: &DenseScorer,
    dataset: &[EvalExample],
    config: &PipelineConfig,
) -> Result<RankingReport, PipelineError> {
    let pipeline = TwoStagePipeline::new(index, corpus, scorer, config.clone())?;
    evaluate_with(dataset, corpus, |example| {
        let ranked = pipeline.rerank_candidates(&example.claim)?;
        Ok(ranked.iter().position(|s| s.doc_id == example.gold_doc_id).map(|p| p + 1))
    })
}

/// Grades the lexical stage alone: the gold's rank within the BM25 top-m.
pub fn evaluate_lexical(
    index: &InvertedIndex,
    corpus: &Corpus,
    dataset: &[EvalExample],
    m: usize,
    bm25: &Bm25Params,
) -> Result<RankingReport, PipelineError> {
    if m < 1 {
        return Err(PipelineError::BadConfig(format!("m must be ≥ 1, got {m}")));
    }
    evaluate_with(dataset, corpus, |example| {
        let ranked = index.retrieve_top_m(&example.claim, m, bm25);
        Ok(ranked.iter().position(|s| s.doc_id == example.gold_doc_id).map(|p| p + 1))
    })
}

/// Mean NDCG@10 of the two-stage pipeline over a validation split — the
/// model-selection signal for retriever training.
pub fn mean_ndcg_at_10(
    index: &InvertedIndex,
    corpus: &Corpus,
    scorer: &DenseScorer,
    validation: &[EvalExample],
    config: &PipelineConfig,
) -> Result<f64, PipelineError> {
    let report = evaluate_two_stage(index, corpus, scorer, validation, config)?;
    let mut sum = 0.0;
    for outcome in &report.per_example {
        if let ExampleRank::Ranked(rank) = outcome {
            sum += ndcg_at_k(Some(*rank), 10)?;
        }
    }
    Ok(sum / report.evaluated as f64)
}

/// The checkpoint `train_with_selection` kept, with its training history.
#[derive(Debug)]
pub struct SelectionOutcome {
    pub scorer: DenseScorer,
    /// Epoch (0-based) the kept checkpoint came from.
    pub best_epoch: usize,
    /// Validation NDCG@10 of the kept checkpoint.
    pub best_score: f64,
    /// Validation NDCG@10 after each epoch.
    pub epoch_scores: Vec<f64>,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains the scorer and keeps the epoch checkpoint with the best validation
/// NDCG@10 (earliest epoch wins ties).
pub fn train_with_selection(
    scorer: DenseScorer,
    train_set: &[EvalExample],
    validation_set: &[EvalExample],
    corpus: &Corpus,
    index: &InvertedIndex,
    train_config: &RetrieverTrainConfig,
    pipeline_config: &PipelineConfig,
) -> Result<SelectionOutcome, PipelineError> {
    pipeline_config.validate()?;
    let mut best: Option<(DenseScorer, usize, f64)> = None;
    let mut epoch_scores = Vec::new();
    let mut eval_error: Option<PipelineError> = None;

    let outcome = train_with_callback(
        scorer,
        train_set,
        corpus,
        index,
        train_config,
        |candidate, epoch, _loss| {
            if eval_error.is_some() {
                return;
            }
            match mean_ndcg_at_10(index, corpus, candidate, validation_set, pipeline_config) {
                Ok(score) => {
                    epoch_scores.push(score);
                    let improved = best.as_ref().map_or(true, |&(_, _, b)| score > b);
                    if improved {
                        best = Some((candidate.clone(), epoch, score));
                    }
                }
                Err(e) => eval_error = Some(e),
            }
        },
    )?;
    if let Some(e) = eval_error {
        return Err(e);
    }
    let (scorer, best_epoch, best_score) =
        best.expect("training ran at least one epoch, so a checkpoint was scored");
    Ok(SelectionOutcome {
        scorer,
        best_epoch,
        best_score,
        epoch_scores,
        epoch_losses: outcome.epoch_losses,
    })
}

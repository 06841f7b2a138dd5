//! Two-stage retrieval: a cheap lexical pass narrows the corpus to a small
//! candidate subset, then the trained dense scorer reranks that subset.
//! Includes the ranking-evaluation harness that grades both stages against
//! gold evidence annotations.

pub mod eval;
pub mod metrics;

use thiserror::Error;

use crate::corpus::Corpus;
use crate::dense::{DenseError, DenseScorer};
use crate::lexical::{sort_ranked, Bm25Params, InvertedIndex, ScoredDocument, Stage};

pub use eval::{
    evaluate_lexical, evaluate_two_stage, mean_ndcg_at_10, train_with_selection, EvalExample,
    ExampleRank, RankingReport, SelectionOutcome,
};
pub use metrics::{ndcg_at_k, ndcg_multi_gold, recall_at_k, MetricsError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pipeline config: {0}")]
    BadConfig(String),
    #[error("document {id:?} is indexed but missing from the corpus")]
    MissingDocument { id: String },
    #[error("evaluation needs at least one example")]
    EmptyDataset,
    #[error("every example was excluded: no gold document exists in the corpus")]
    AllExamplesExcluded,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// Sizing of the two stages.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Stage-1 candidate subset size.
    pub m: usize,
    /// Final evidence count returned to callers (typically 3 or 5).
    pub k_out: usize,
    pub bm25: Bm25Params,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { m: 20, k_out: 5, bm25: Bm25Params::default() }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k_out < 1 || self.k_out > self.m {
            return Err(PipelineError::BadConfig(format!(
                "need 1 ≤ k_out ≤ m, got k_out={} m={}",
                self.k_out, self.m
            )));
        }
        self.bm25.validate().map_err(PipelineError::BadConfig)?;
        Ok(())
    }
}

/// The composed retriever: lexical index for the coarse pass, dense scorer
/// for the fine pass, corpus for the evidence texts the scorer reads.
pub struct TwoStagePipeline<'a> {
    index: &'a InvertedIndex,
    corpus: &'a Corpus,
    scorer: &'a DenseScorer,
    config: PipelineConfig,
}

impl<'a> TwoStagePipeline<'a> {
    pub fn new(
        index: &'a InvertedIndex,
        corpus: &'a Corpus,
        scorer: &'a DenseScorer,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self { index, corpus, scorer, config })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Coarse-to-fine retrieval: top-m by lexical score, rescored by the
    /// dense scorer, top-k_out returned (ties broken by ascending doc id).
    pub fn retrieve(&self, claim_text: &str) -> Result<Vec<ScoredDocument>, PipelineError> {
        let mut full = self.rerank_candidates(claim_text)?;
        full.truncate(self.config.k_out);
        Ok(full)
    }

    /// The full dense reranking of the stage-1 subset, not truncated to
    /// k_out. Evaluation uses this to locate gold documents that survive
    /// stage 1 but rank below the final cutoff.
    pub fn rerank_candidates(&self, claim_text: &str) -> Result<Vec<ScoredDocument>, PipelineError> {
        let stage1 = self.index.retrieve_top_m(claim_text, self.config.m, &self.config.bm25);
        let mut scored: Vec<(String, f64)> = Vec::with_capacity(stage1.len());
        for candidate in stage1 {
            let doc = self
                .corpus
                .get(&candidate.doc_id)
                .ok_or_else(|| PipelineError::MissingDocument { id: candidate.doc_id.clone() })?;
            let score = self.scorer.relevance(claim_text, &doc.evidence_text());
            scored.push((candidate.doc_id, score));
        }
        sort_ranked(&mut scored);
        Ok(scored
            .into_iter()
            .map(|(doc_id, score)| ScoredDocument::new(doc_id, score, Stage::Dense))
            .collect())
    }
}

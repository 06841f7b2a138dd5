//! Lexical retrieval: tokenization, inverted index, BM25 scoring, and the
//! low/high-relevance document samplers used to assemble dense-retriever
//! training batches.
//!
//! BM25 is the coarse first stage: cheap enough to score the whole corpus,
//! good enough that the gold document lands in the top-m candidates most of
//! the time. The same machinery doubles as the sampling oracle — top-ranked
//! non-gold documents become contrastive positives, zero-score documents
//! become negatives.

mod index;
mod sampling;
mod tokenize;

use serde::{Deserialize, Serialize};

pub use index::{Bm25Params, IndexError, InvertedIndex, Posting};
pub use sampling::{sample_negatives, sample_positives, SamplingError};
pub use tokenize::{tokenize, tokenize_with, TokenizerConfig, STOPWORDS, STOPWORD_LIST_VERSION};

/// Which scorer produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Lexical,
    Dense,
}

/// A document id paired with a stage-tagged relevance score: the currency
/// every retrieval stage speaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDocument {
    pub doc_id: String,
    pub score: f64,
    pub stage: Stage,
}

impl ScoredDocument {
    pub fn new(doc_id: impl Into<String>, score: f64, stage: Stage) -> Self {
        Self { doc_id: doc_id.into(), score, stage }
    }
}

/// Descending score, ties broken by ascending doc_id. The single ordering
/// rule both stages use, so ranked outputs are fully deterministic.
pub(crate) fn sort_ranked(entries: &mut [(String, f64)]) {
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("scores must be finite").then_with(|| a.0.cmp(&b.0))
    });
}

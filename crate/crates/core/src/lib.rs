//! Evidence retrieval and response alignment for automated claim verification.
//!
//! The crate wires together four stages:
//!
//! 1. **Corpus management** ([`corpus`]): ingest raw article records into an
//!    append-only evidence store with validation and deduplication.
//! 2. **Two-stage retrieval** ([`lexical`], [`dense`], [`pipeline`]): a BM25
//!    inverted index produces a coarse candidate set which a trained dense
//!    scorer reranks; ranking quality is measured with NDCG/Recall cutoffs.
//! 3. **Composite rewards** ([`reward`]): logistic-regression feedback
//!    classifiers (refutation, factuality, politeness) plus embedding
//!    relevance are combined into a scalar reward with a full breakdown.
//! 4. **Policy alignment** ([`policy`]): a token-bigram response policy is
//!    supervised-finetuned and then optimized with clipped PPO against the
//!    composite reward under a per-token KL penalty toward the frozen
//!    reference policy.
//!
//! [`orchestrate`] glues the stages into a single engine that retrieves
//! evidence, renders a prompt, calls a generation backend, and scores the
//! result. [`synthetic`] builds seeded desk-scale corpora and benchmarks used
//! by the test suite, the benches, and demos.

pub mod artifact;
pub mod corpus;
pub mod dense;
pub mod hashing;
pub mod lexical;
pub mod optim;
pub mod orchestrate;
pub mod pipeline;
pub mod policy;
pub mod reward;
pub mod synthetic;

pub use corpus::{Corpus, EvidenceDocument, EvidenceStore, IngestReport};
pub use dense::{DenseScorer, EmbeddingConfig, Featurizer};
pub use lexical::{InvertedIndex, ScoredDocument, Stage};
pub use orchestrate::{CounterResponse, Engine, PromptTemplate};
pub use pipeline::{EvalExample, PipelineConfig, RankingReport, TwoStagePipeline};
pub use policy::{ActorPolicy, Policy, PpoConfig, Trajectory};
pub use reward::{FeedbackClassifier, RewardBreakdown, RewardConfig};

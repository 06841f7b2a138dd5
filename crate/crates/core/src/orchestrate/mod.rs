//! End-to-end orchestration: prompt rendering, generation backends, and the
//! engine that runs retrieve → prompt → generate → score as one code path
//! for both the CLI and the HTTP service.

mod backend;
mod engine;
mod prompt;

pub use backend::{
    GenerationBackend, GenerationRequest, GenerationResponse, PolicyBackend, RetryPolicy,
    StubBackend,
};
pub use engine::{CounterResponse, Engine, EngineConfig, HealthReport, Provenance};
pub use prompt::PromptTemplate;

use thiserror::Error;

use crate::lexical::ScoredDocument;
use crate::pipeline::PipelineError;
use crate::reward::RewardError;

#[derive(Debug, Error)]
pub enum OrchestrateError {
    #[error("prompt rendering needs at least one evidence document")]
    EmptyEvidence,
    #[error("prompt template: {0}")]
    BadTemplate(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    /// The generation backend stayed down through the retry budget. The
    /// retrieved evidence is preserved so callers can degrade gracefully.
    #[error("generation backend failed after {attempts} attempts: {message}")]
    Backend { message: String, attempts: usize, evidence: Vec<ScoredDocument> },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

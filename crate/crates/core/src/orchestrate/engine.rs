//! The end-to-end engine: retrieve evidence, render the prompt, call the
//! generation backend (with retries), score the result. The CLI's `respond`
//! command and the service's `/respond` endpoint both call [`Engine`], so
//! identical inputs take one code path to identical outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use super::backend::{GenerationBackend, GenerationRequest, RetryPolicy};
use super::prompt::PromptTemplate;
use super::OrchestrateError;
use crate::corpus::Corpus;
use crate::dense::DenseScorer;
use crate::lexical::{InvertedIndex, ScoredDocument};
use crate::pipeline::{PipelineConfig, TwoStagePipeline};
use crate::reward::{compute_reward, AspectClassifiers, RewardBreakdown, RewardConfig};

/// Everything tunable about the engine's inference path.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub pipeline: PipelineConfig,
    pub reward: RewardConfig,
    /// Token budget passed to the backend.
    pub max_tokens: usize,
    pub temperature: f64,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            reward: RewardConfig::default(),
            max_tokens: 64,
            temperature: 0.0,
            timeout: Duration::from_secs(10),
            retry: RetryPolicy::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), OrchestrateError> {
        self.pipeline.validate()?;
        self.reward.validate()?;
        if self.timeout.is_zero() {
            return Err(OrchestrateError::BadRequest("timeout must be positive".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(OrchestrateError::BadRequest(format!(
                "temperature must be finite and ≥ 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// How a response came to be: which backend produced it after how many
/// attempts, and the exact evidence texts the reward was computed over.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub backend_id: String,
    pub attempts: usize,
    pub backend_latency_ms: u64,
    /// Evidence texts in rerank order — the reward inputs, verbatim.
    pub evidence_texts: Vec<String>,
}

/// The full product of one `respond` call.
#[derive(Debug, Clone, Serialize)]
pub struct CounterResponse {
    pub claim: String,
    /// Top-k evidence in dense-rerank order.
    pub evidence: Vec<ScoredDocument>,
    pub response: String,
    pub reward: RewardBreakdown,
    pub provenance: Provenance,
}

/// Liveness and identity for `GET /health`.
#[derive(Debug, Clone, Serialize)]
pub struct HealthReport {
    pub version: String,
    /// Artifact name → SHA-256 of the loaded file.
    pub artifacts: BTreeMap<String, String>,
}

pub struct Engine {
    corpus: Corpus,
    index: InvertedIndex,
    scorer: DenseScorer,
    classifiers: AspectClassifiers,
    template: PromptTemplate,
    backend: Box<dyn GenerationBackend>,
    config: EngineConfig,
    artifact_hashes: BTreeMap<String, String>,
}

impl Engine {
    pub fn new(
        corpus: Corpus,
        index: InvertedIndex,
        scorer: DenseScorer,
        classifiers: AspectClassifiers,
        template: PromptTemplate,
        backend: Box<dyn GenerationBackend>,
        config: EngineConfig,
    ) -> Result<Self, OrchestrateError> {
        config.validate()?;
        Ok(Self {
            corpus,
            index,
            scorer,
            classifiers,
            template,
            backend,
            config,
            artifact_hashes: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    /// Records the SHA-256 of an artifact file under `name` for `/health`.
    pub fn register_artifact(
        &mut self,
        name: impl Into<String>,
        path: &Path,
    ) -> std::io::Result<()> {
        use sha2::{Digest, Sha256};
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.artifact_hashes.insert(name.into(), hex);
        Ok(())
    }

    pub fn health(&self) -> HealthReport {
        HealthReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            artifacts: self.artifact_hashes.clone(),
        }
    }

    /// Two-stage evidence retrieval; `k` overrides the configured output
    /// count for this call.
    pub fn retrieve(
        &self,
        claim: &str,
        k: Option<usize>,
    ) -> Result<Vec<ScoredDocument>, OrchestrateError> {
        let mut pipeline_config = self.config.pipeline.clone();
        if let Some(k) = k {
            pipeline_config.k_out = k;
        }
        let pipeline =
            TwoStagePipeline::new(&self.index, &self.corpus, &self.scorer, pipeline_config)?;
        Ok(pipeline.retrieve(claim)?)
    }

    /// Retrieve, prompt, generate (with retries), score. A backend that
    /// stays down after the retry budget yields an error that still carries
    /// the retrieved evidence.
    pub fn respond(&self, claim: &str) -> Result<CounterResponse, OrchestrateError> {
        let evidence = self.retrieve(claim, None)?;
        let texts = self.evidence_texts(&evidence)?;
        let prompt = self.template.render(claim, &texts)?;
        let request = GenerationRequest {
            prompt,
            max_tokens: self.config.max_tokens,
            temperature: self.config.temperature,
            timeout: self.config.timeout,
        };
        let (generation, attempts) =
            match self.config.retry.run(|| self.backend.generate(&request)) {
                Ok(success) => success,
                Err((message, attempts)) => {
                    return Err(OrchestrateError::Backend { message, attempts, evidence })
                }
            };
        let reward = compute_reward(
            &self.classifiers,
            &self.scorer,
            &self.config.reward,
            claim,
            &texts,
            &generation.text,
        )?;
        Ok(CounterResponse {
            claim: claim.to_string(),
            evidence,
            response: generation.text,
            reward,
            provenance: Provenance {
                backend_id: generation.backend_id,
                attempts,
                backend_latency_ms: generation.latency.as_millis() as u64,
                evidence_texts: texts,
            },
        })
    }

    fn evidence_texts(
        &self,
        evidence: &[ScoredDocument],
    ) -> Result<Vec<String>, OrchestrateError> {
        evidence
            .iter()
            .map(|scored| {
                self.corpus
                    .get(&scored.doc_id)
                    .map(|doc| doc.evidence_text())
                    .ok_or_else(|| {
                        OrchestrateError::Pipeline(
                            crate::pipeline::PipelineError::MissingDocument {
                                id: scored.doc_id.clone(),
                            },
                        )
                    })
            })
            .collect()
    }
}

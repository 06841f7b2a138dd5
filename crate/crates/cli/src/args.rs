//! Flag groups shared by several subcommands. Every value is optional:
//! the effective setting is flag, else config file, else built-in default.

use std::path::PathBuf;

use clap::Args;

/// Paths to engine artifacts. Defaults live under the artifact directory.
#[derive(Debug, Clone, Args)]
pub struct ArtifactArgs {
    /// Evidence store file (default: <artifacts>/corpus.store).
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Inverted index file (default: <artifacts>/index.bin).
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Dense scorer checkpoint (default: <artifacts>/scorer.bin).
    #[arg(long, value_name = "FILE")]
    pub scorer: Option<PathBuf>,
    /// Feedback classifier checkpoint (default: <artifacts>/classifiers.bin).
    #[arg(long, value_name = "FILE")]
    pub classifiers: Option<PathBuf>,
    /// Policy checkpoint, used by the `policy` generation backend
    /// (default: <artifacts>/aligned.bin).
    #[arg(long, value_name = "FILE")]
    pub policy: Option<PathBuf>,
}

/// Query-time retrieval shape.
#[derive(Debug, Clone, Args)]
pub struct RetrievalArgs {
    /// Stage-1 candidate count handed to the reranker.
    #[arg(long)]
    pub m: Option<usize>,
    /// Documents returned after reranking.
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Term-frequency saturation constant of the lexical scorer.
    #[arg(long)]
    pub k1: Option<f64>,
    /// Length-normalization strength of the lexical scorer.
    #[arg(long)]
    pub b: Option<f64>,
}

/// Generation backend selection and budget.
#[derive(Debug, Clone, Args)]
pub struct GenerationArgs {
    /// Backend kind: stub, policy, or http.
    #[arg(long, value_name = "KIND")]
    pub backend: Option<String>,
    /// Canned response text for the stub backend.
    #[arg(long, value_name = "TEXT")]
    pub stub_text: Option<String>,
    /// Generation service URL for the http backend.
    #[arg(long, value_name = "URL")]
    pub url: Option<String>,
    /// Token budget passed to the backend.
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Sampling temperature passed to the backend.
    #[arg(long, value_name = "T")]
    pub gen_temperature: Option<f64>,
    /// Per-attempt backend timeout in milliseconds.
    #[arg(long, value_name = "MS")]
    pub timeout_ms: Option<u64>,
    /// Retries after a failed generation attempt.
    #[arg(long)]
    pub retries: Option<usize>,
    /// Base delay between retries in milliseconds (doubles per attempt).
    #[arg(long, value_name = "MS")]
    pub retry_delay_ms: Option<u64>,
}

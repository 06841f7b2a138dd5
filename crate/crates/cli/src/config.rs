//! One TOML file configures every command; flags override file values and
//! built-in defaults fill the rest. All fields are optional so a config
//! file only needs the values it wants to change. Unknown keys are
//! rejected — a typo should fail loudly, not silently fall back.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub paths: PathsSection,
    pub retrieval: RetrievalSection,
    pub embedding: EmbeddingSection,
    pub reward: RewardSection,
    pub retriever: RetrieverSection,
    pub feedback: FeedbackSection,
    pub sft: SftSection,
    pub align: AlignSection,
    pub generation: GenerationSection,
    pub serve: ServeSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Directory artifacts default into (store, index, scorer, ...).
    pub artifacts: Option<PathBuf>,
}

/// Query-time retrieval shape: stage-1 candidate count, final output
/// count, and the lexical scoring constants.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: Option<usize>,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSection {
    /// Scale on the two relevance terms of the composite reward.
    pub alpha: Option<f64>,
}

/// Dense-retriever training knobs (`train-retriever`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrieverSection {
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub warmup_steps: Option<usize>,
    pub weight_decay: Option<f64>,
    pub seed: Option<u64>,
}

/// Feedback-classifier training knobs (`train-reward`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackSection {
    pub feature_dim: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
    pub tolerance: Option<f64>,
    pub test_fraction: Option<f64>,
    pub balanced: Option<bool>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SftSection {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    /// Response length cap (tokens) for freshly initialized policies.
    pub max_length: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignSection {
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub rollouts: Option<usize>,
    pub learning_rate: Option<f64>,
    pub kl_target: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    /// `stub`, `policy`, or `http`.
    pub backend: Option<String>,
    /// Canned response of the stub backend.
    pub stub_text: Option<String>,
    /// Generation service URL for the `http` backend.
    pub url: Option<String>,
    pub max_tokens: Option<usize>,
    pub temperature: Option<f64>,
    pub timeout_ms: Option<u64>,
    pub retries: Option<usize>,
    pub retry_delay_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub addr: Option<String>,
}

/// Reads and parses the config file; `None` means "all defaults".
pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

/// Flag beats file beats built-in default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Overwrites `slot` when a flag or file value is present, otherwise keeps
/// the default already in place.
pub fn set<T>(slot: &mut T, flag: Option<T>, file: Option<T>) {
    if let Some(v) = flag.or(file) {
        *slot = v;
    }
}

//! Dense relevance scoring: a trainable embedding model over hashed
//! bag-of-words features (or externally supplied vectors) with
//! temperature-scaled cosine similarity.
//!
//! The scorer is a single dim×dim projection applied to a sparse feature
//! vector, L2-normalized. Relevance is cosine/t — at the default t=0.05 the
//! score spans [−20, 20], giving exp(f) a usable dynamic range inside the
//! contrastive term of the training loss. `ExternalVectors` mode accepts
//! precomputed per-text embeddings (e.g. from a real pretrained encoder)
//! keyed by exact text, so a stronger featurizer drops in without code
//! changes; the trainable projection sits on top either way.

mod loss;
mod train;

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError};
use crate::hashing;
use crate::lexical::{tokenize, SamplingError};

pub use loss::{loss_eq1, loss_with_form, ContrastiveForm, LossGrad, RetrieverTrainBatch};
pub use train::{train, train_with_callback, RetrieverTrainConfig, TrainOutcome};

const SCORER_MAGIC: [u8; 4] = *b"DSCR";
const SCORER_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("embedding config: {0}")]
    BadConfig(String),
    #[error("non-finite value during training ({context})")]
    NonFinite { context: String },
    #[error("gold evidence missing from corpus: {}", ids.join(", "))]
    MissingGold { ids: Vec<String> },
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("invalid training batch: {0}")]
    InvalidBatch(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// How texts become feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Featurizer {
    /// Tokens hashed into `dim` buckets, valued by occurrence count.
    HashedBagOfWords,
    /// Precomputed per-text vectors, keyed by the exact text. Texts absent
    /// from the table embed to the fallback vector.
    ExternalVectors { vectors: BTreeMap<String, Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub featurizer: Featurizer,
    /// Cosine temperature t; relevance = cos/t.
    pub temperature: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { dim: 256, featurizer: Featurizer::HashedBagOfWords, temperature: 0.05 }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), DenseError> {
        if self.dim < 8 {
            return Err(DenseError::BadConfig(format!("dim must be ≥ 8, got {}", self.dim)));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(DenseError::BadConfig(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if let Featurizer::ExternalVectors { vectors } = &self.featurizer {
            for (text, v) in vectors {
                if v.len() != self.dim {
                    return Err(DenseError::BadConfig(format!(
                        "external vector for {text:?} has length {}, expected {}",
                        v.len(),
                        self.dim
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(DenseError::BadConfig(format!(
                        "external vector for {text:?} contains non-finite values"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Cached embedding of one text: sparse features plus the normalized output,
/// everything the loss gradients need.
#[derive(Debug, Clone)]
pub(crate) struct EmbedCache {
    /// (bucket, value) pairs; empty when the fallback vector was used.
    pub features: Vec<(usize, f64)>,
    pub unit: Array1<f64>,
    /// ‖projection·features‖; 0 for the fallback.
    pub norm: f64,
    pub fallback: bool,
}

/// Serialized scorer payload.
#[derive(Serialize, Deserialize)]
struct ScorerCheckpoint {
    config: EmbeddingConfig,
    projection: Array2<f64>,
}

/// Trainable dense relevance scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseScorer {
    config: EmbeddingConfig,
    projection: Array2<f64>,
}

impl DenseScorer {
    /// A fresh, untrained scorer: identity projection, so embeddings start
    /// as plain normalized hashed bag-of-words.
    pub fn new(config: EmbeddingConfig) -> Result<Self, DenseError> {
        config.validate()?;
        let projection = Array2::eye(config.dim);
        Ok(Self { config, projection })
    }

    /// Scorer with N(0, scale²) projection entries; used by gradient checks
    /// that need a generic (non-identity) linear map.
    pub fn with_random_projection(
        config: EmbeddingConfig,
        scale: f64,
        seed: u64,
    ) -> Result<Self, DenseError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = config.dim;
        let projection =
            Array2::from_shape_fn((dim, dim), |_| standard_normal(&mut rng) * scale);
        Ok(Self { config, projection })
    }

    /// Scorer wrapping an explicit projection matrix — one trained elsewhere,
    /// loaded from a checkpoint, or perturbed entry-by-entry for gradient
    /// verification. The matrix must be square in the configured dimension
    /// with finite entries.
    pub fn from_projection(
        config: EmbeddingConfig,
        projection: Array2<f64>,
    ) -> Result<Self, DenseError> {
        config.validate()?;
        if projection.shape() != [config.dim, config.dim] {
            return Err(DenseError::BadConfig(format!(
                "projection shape {:?} does not match dim {}",
                projection.shape(),
                config.dim
            )));
        }
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(DenseError::BadConfig("projection contains non-finite values".into()));
        }
        Ok(Self { config, projection })
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    pub(crate) fn projection_mut(&mut self) -> &mut Array2<f64> {
        &mut self.projection
    }

    /// Sparse feature vector of a text, or `None` when it has no features
    /// (empty tokenization / unknown external key).
    fn featurize(&self, text: &str) -> Option<Vec<(usize, f64)>> {
        match &self.config.featurizer {
            Featurizer::HashedBagOfWords => {
                let tokens = tokenize(text);
                if tokens.is_empty() {
                    return None;
                }
                let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
                for t in &tokens {
                    *counts.entry(hashing::bucket(t, self.config.dim)).or_insert(0.0) += 1.0;
                }
                Some(counts.into_iter().collect())
            }
            Featurizer::ExternalVectors { vectors } => {
                let v = vectors.get(text)?;
                let sparse: Vec<(usize, f64)> =
                    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, &x)| (i, x)).collect();
                if sparse.is_empty() {
                    None
                } else {
                    Some(sparse)
                }
            }
        }
    }

    pub(crate) fn embed_cache(&self, text: &str) -> EmbedCache {
        let dim = self.config.dim;
        let Some(features) = self.featurize(text) else {
            return Self::fallback_cache(dim);
        };
        let mut y = Array1::<f64>::zeros(dim);
        for &(bucket, value) in &features {
            y.scaled_add(value, &self.projection.column(bucket));
        }
        let norm = y.dot(&y).sqrt();
        if norm < 1e-12 {
            // Projection annihilated the features; treat like no features.
            return Self::fallback_cache(dim);
        }
        EmbedCache { features, unit: y / norm, norm, fallback: false }
    }

    /// Fixed fallback for texts with no usable features: the first basis
    /// vector, bypassing the projection (and therefore carrying no gradient).
    fn fallback_cache(dim: usize) -> EmbedCache {
        let mut unit = Array1::<f64>::zeros(dim);
        unit[0] = 1.0;
        EmbedCache { features: Vec::new(), unit, norm: 0.0, fallback: true }
    }

    /// L2-normalized embedding of a text.
    pub fn embed(&self, text: &str) -> Array1<f64> {
        self.embed_cache(text).unit
    }

    /// Plain cosine similarity of two texts' embeddings, in [−1, 1].
    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        self.embed_cache(a).unit.dot(&self.embed_cache(b).unit)
    }

    /// Temperature-scaled relevance f = cosine/t, in [−1/t, 1/t]. Symmetric.
    pub fn relevance(&self, a: &str, b: &str) -> f64 {
        self.cosine(a, b) / self.config.temperature
    }

    pub fn save(&self, path: &Path) -> Result<(), DenseError> {
        let ckpt =
            ScorerCheckpoint { config: self.config.clone(), projection: self.projection.clone() };
        Ok(artifact::save(path, SCORER_MAGIC, SCORER_VERSION, &ckpt)?)
    }

    pub fn load(path: &Path) -> Result<Self, DenseError> {
        let ckpt: ScorerCheckpoint =
            artifact::load(path, SCORER_MAGIC, SCORER_VERSION, "dense scorer")?;
        ckpt.config.validate()?;
        if ckpt.projection.dim() != (ckpt.config.dim, ckpt.config.dim) {
            return Err(DenseError::BadConfig(format!(
                "projection shape {:?} does not match dim {}",
                ckpt.projection.dim(),
                ckpt.config.dim
            )));
        }
        if ckpt.projection.iter().any(|x| !x.is_finite()) {
            return Err(DenseError::BadConfig("projection contains non-finite values".into()));
        }
        Ok(Self { config: ckpt.config, projection: ckpt.projection })
    }
}

/// Box–Muller standard normal; avoids depending on a distributions crate
/// for one function.
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

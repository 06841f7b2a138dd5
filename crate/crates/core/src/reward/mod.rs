//! Human-feedback reward modeling: per-aspect binary classifiers trained on
//! labeled (claim, evidence, response) triples, composed with dense-scorer
//! relevance into a single scalar reward for policy optimization.

mod classifier;
mod compose;
mod features;

use thiserror::Error;

use crate::artifact::ArtifactError;

pub use classifier::{
    balanced_accuracy, train_classifier, Aspect, ClassifierMetrics, ClassifierTrainConfig,
    FeedbackClassifier, FeedbackExample, TrainedClassifier,
};
pub use compose::{compute_reward, AspectClassifiers, RewardBreakdown, RewardConfig};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("reward config: {0}")]
    BadConfig(String),
    #[error("dataset contains a single class; both labels are required")]
    SingleClass,
    #[error("expected aspect {expected:?}, found {found:?}")]
    MixedAspects { expected: Aspect, found: Aspect },
    #[error("label {label} has only {count} example(s); need at least 2 for a stratified split")]
    TooFewExamples { label: u8, count: usize },
    #[error("feedback dataset is empty")]
    EmptyDataset,
    #[error("{predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("evidence set is empty; the evidence-relevance max is undefined")]
    EmptyEvidence,
    #[error("non-finite value during training ({context})")]
    NonFinite { context: String },
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

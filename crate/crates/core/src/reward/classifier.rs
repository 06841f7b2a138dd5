//! Binary feedback classifiers: logistic models over hashed text features,
//! trained with class-balanced cross entropy on a stratified split. One
//! classifier per feedback aspect; the composition layer consumes all three.

use serde::{Deserialize, Serialize};

use super::features::featurize;
use super::RewardError;
use crate::hashing::mix_seed;
use crate::optim::AdamW;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The three human-feedback dimensions the reward model scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Refutation,
    Factuality,
    Politeness,
}

impl Aspect {
    pub const ALL: [Aspect; 3] = [Aspect::Refutation, Aspect::Factuality, Aspect::Politeness];

    pub fn name(self) -> &'static str {
        match self {
            Aspect::Refutation => "refutation",
            Aspect::Factuality => "factuality",
            Aspect::Politeness => "politeness",
        }
    }
}

/// One labeled feedback judgment on a (claim, evidence, response) triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackExample {
    pub claim: String,
    pub evidence: Vec<String>,
    pub response: String,
    /// Binary human judgment: 1 approves the response on this aspect.
    pub label: u8,
    pub aspect: Aspect,
}

/// Margins beyond this saturate the sigmoid in f64; clamping keeps scores
/// strictly inside (0, 1).
const MAX_MARGIN: f64 = 36.0;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z.clamp(-MAX_MARGIN, MAX_MARGIN)).exp())
}

/// A trained logistic scorer for one aspect. Immutable after training, safe
/// to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackClassifier {
    pub aspect: Aspect,
    weights: Vec<f64>,
    bias: f64,
    feature_dim: usize,
}

impl FeedbackClassifier {
    /// An untrained classifier (zero weights): scores everything 0.5.
    pub fn zeroed(aspect: Aspect, feature_dim: usize) -> Self {
        Self { aspect, weights: vec![0.0; feature_dim], bias: 0.0, feature_dim }
    }

    /// Zero weights with a pinned bias, so the score is a known constant —
    /// handy for exercising the composition arithmetic in isolation.
    pub fn with_bias(aspect: Aspect, feature_dim: usize, bias: f64) -> Self {
        Self { aspect, weights: vec![0.0; feature_dim], bias, feature_dim }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn margin(&self, claim: &str, evidence: &[String], response: &str) -> f64 {
        let features = featurize(claim, evidence, response, self.feature_dim);
        let dot: f64 = features.iter().map(|&(i, v)| self.weights[i] * v).sum();
        dot + self.bias
    }

    /// Sigmoid of the linear score over the featurized triple; deterministic,
    /// strictly inside (0, 1).
    pub fn score(&self, claim: &str, evidence: &[String], response: &str) -> f64 {
        sigmoid(self.margin(claim, evidence, response))
    }
}

/// Hyperparameters for [`train_classifier`].
#[derive(Debug, Clone)]
pub struct ClassifierTrainConfig {
    pub feature_dim: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the relative loss change over an epoch drops below this.
    pub tolerance: f64,
    /// Fraction of each class held out for evaluation.
    pub test_fraction: f64,
    /// Weight classes inversely to their frequency. Disable to train with
    /// plain cross entropy (for ablation comparisons).
    pub balanced: bool,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self {
            feature_dim: 1 << 14,
            learning_rate: 0.05,
            max_epochs: 200,
            tolerance: 1e-7,
            test_fraction: 0.2,
            balanced: true,
            seed: 0,
        }
    }
}

impl ClassifierTrainConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |m: String| Err(RewardError::BadConfig(m));
        if self.feature_dim < 16 {
            return bad(format!("feature_dim must be ≥ 16, got {}", self.feature_dim));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be ≥ 1".into());
        }
        if !(self.tolerance >= 0.0) {
            return bad(format!("tolerance must be ≥ 0, got {}", self.tolerance));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction must be in (0,1), got {}", self.test_fraction));
        }
        Ok(())
    }
}

/// Held-out evaluation of a trained classifier (positive class = label 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierMetrics {
    pub balanced_accuracy: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// A trained classifier with its held-out metrics and training trace.
#[derive(Debug)]
pub struct TrainedClassifier {
    pub classifier: FeedbackClassifier,
    pub metrics: ClassifierMetrics,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub train_size: usize,
    pub test_size: usize,
}

/// Mean of per-class recalls.
pub fn balanced_accuracy(predictions: &[bool], labels: &[bool]) -> Result<f64, RewardError> {
    if predictions.len() != labels.len() {
        return Err(RewardError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut hit = [0usize; 2];
    let mut count = [0usize; 2];
    for (&p, &y) in predictions.iter().zip(labels) {
        let class = usize::from(y);
        count[class] += 1;
        if p == y {
            hit[class] += 1;
        }
    }
    if count[0] == 0 || count[1] == 0 {
        return Err(RewardError::SingleClass);
    }
    let recall0 = hit[0] as f64 / count[0] as f64;
    let recall1 = hit[1] as f64 / count[1] as f64;
    Ok((recall0 + recall1) / 2.0)
}

fn evaluate(
    classifier: &FeedbackClassifier,
    test: &[&FeedbackExample],
) -> Result<ClassifierMetrics, RewardError> {
    let predictions: Vec<bool> = test
        .iter()
        .map(|ex| classifier.score(&ex.claim, &ex.evidence, &ex.response) > 0.5)
        .collect();
    let labels: Vec<bool> = test.iter().map(|ex| ex.label == 1).collect();

    let ba = balanced_accuracy(&predictions, &labels)?;
    let n = labels.len() as f64;
    let correct = predictions.iter().zip(&labels).filter(|(p, y)| p == y).count() as f64;
    let tp = predictions.iter().zip(&labels).filter(|&(&p, &y)| p && y).count() as f64;
    let fp = predictions.iter().zip(&labels).filter(|&(&p, &y)| p && !y).count() as f64;
    let fn_ = predictions.iter().zip(&labels).filter(|&(&p, &y)| !p && y).count() as f64;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 =
        if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(ClassifierMetrics { balanced_accuracy: ba, accuracy: correct / n, f1, precision, recall })
}

/// Stratified split: each class is shuffled with its own seeded stream, and
/// `test_fraction` of it (at least one example) is held out.
fn stratified_split<'a>(
    examples: &'a [FeedbackExample],
    config: &ClassifierTrainConfig,
) -> Result<(Vec<&'a FeedbackExample>, Vec<&'a FeedbackExample>), RewardError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut members: Vec<&FeedbackExample> =
            examples.iter().filter(|ex| ex.label == class).collect();
        if members.len() < 2 {
            return Err(RewardError::TooFewExamples { label: class, count: members.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, u64::from(class)));
        members.shuffle(&mut rng);
        let mut held = (members.len() as f64 * config.test_fraction).round() as usize;
        held = held.clamp(1, members.len() - 1);
        test.extend(members.drain(..held));
        train.extend(members);
    }
    Ok((train, test))
}

/// Trains one aspect's classifier with (optionally class-balanced) cross
/// entropy, full-batch, until the loss stops moving or `max_epochs` pass.
/// Evaluation metrics come from the held-out stratified split.
pub fn train_classifier(
    examples: &[FeedbackExample],
    aspect: Aspect,
    config: &ClassifierTrainConfig,
) -> Result<TrainedClassifier, RewardError> {
    config.validate()?;
    if examples.is_empty() {
        return Err(RewardError::EmptyDataset);
    }
    if let Some(stray) = examples.iter().find(|ex| ex.aspect != aspect) {
        return Err(RewardError::MixedAspects { expected: aspect, found: stray.aspect });
    }
    if let Some(bad) = examples.iter().find(|ex| ex.label > 1) {
        return Err(RewardError::BadConfig(format!(
            "labels must be 0 or 1, got {}",
            bad.label
        )));
    }
    let positives = examples.iter().filter(|ex| ex.label == 1).count();
    if positives == 0 || positives == examples.len() {
        return Err(RewardError::SingleClass);
    }

    let (train, test) = stratified_split(examples, config)?;

    // Per-class weights ∝ inverse class frequency, normalized so a balanced
    // set gets weight 1 everywhere: w_c = n / (2 · n_c).
    let n = train.len() as f64;
    let n_pos = train.iter().filter(|ex| ex.label == 1).count() as f64;
    let n_neg = n - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(RewardError::SingleClass);
    }
    let (w_pos, w_neg) = if config.balanced {
        (n / (2.0 * n_pos), n / (2.0 * n_neg))
    } else {
        (1.0, 1.0)
    };

    let features: Vec<Vec<(usize, f64)>> = train
        .iter()
        .map(|ex| featurize(&ex.claim, &ex.evidence, &ex.response, config.feature_dim))
        .collect();
    let targets: Vec<f64> = train.iter().map(|ex| f64::from(ex.label)).collect();
    let class_weights: Vec<f64> =
        train.iter().map(|ex| if ex.label == 1 { w_pos } else { w_neg }).collect();

    // Parameter layout: [weights.. , bias].
    let dim = config.feature_dim;
    let mut params = vec![0.0f64; dim + 1];
    let mut grads = vec![0.0f64; dim + 1];
    let mut opt = AdamW::new(dim + 1, 0.0);

    let mut prev_loss = f64::INFINITY;
    let mut final_loss = f64::INFINITY;
    let mut epochs_run = 0;
    for _ in 0..config.max_epochs {
        grads.fill(0.0);
        let mut loss = 0.0;
        for i in 0..train.len() {
            let dot: f64 = features[i].iter().map(|&(j, v)| params[j] * v).sum();
            let p = sigmoid(dot + params[dim]);
            let y = targets[i];
            let w = class_weights[i];
            loss -= w * (y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            let g = w * (p - y) / n;
            for &(j, v) in &features[i] {
                grads[j] += g * v;
            }
            grads[dim] += g;
        }
        loss /= n;
        if !loss.is_finite() {
            return Err(RewardError::NonFinite {
                context: format!("classifier loss at epoch {epochs_run}"),
            });
        }
        opt.step(&mut params, &grads, config.learning_rate);
        epochs_run += 1;
        final_loss = loss;
        if (prev_loss - loss).abs() < config.tolerance * prev_loss.abs().max(1.0) {
            break;
        }
        prev_loss = loss;
    }

    let bias = params[dim];
    params.truncate(dim);
    let classifier =
        FeedbackClassifier { aspect, weights: params, bias, feature_dim: dim };
    let metrics = evaluate(&classifier, &test)?;
    Ok(TrainedClassifier {
        classifier,
        metrics,
        epochs_run,
        final_loss,
        train_size: train.len(),
        test_size: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(aspect: Aspect, label: u8, response: &str) -> FeedbackExample {
        FeedbackExample {
            claim: "the claim under test".into(),
            evidence: vec!["supporting material".into()],
            response: response.into(),
            label,
            aspect,
        }
    }

    /// Linearly separable set: positive responses use one vocabulary,
    /// negative responses another.
    fn separable(n_per_class: usize, aspect: Aspect) -> Vec<FeedbackExample> {
        let mut out = Vec::new();
        for i in 0..n_per_class {
            out.push(example(
                aspect,
                1,
                &format!("thank you kindly see source{} for details", i % 7),
            ));
            out.push(example(
                aspect,
                0,
                &format!("wrong nonsense rubbish item{} end", i % 7),
            ));
        }
        out
    }

    #[test]
    fn zero_weights_score_half_and_scores_are_deterministic() {
        let c = FeedbackClassifier::zeroed(Aspect::Politeness, 1 << 10);
        let ev = vec!["some evidence".to_string()];
        assert_eq!(c.score("any claim", &ev, "any response"), 0.5);
        let trained = train_classifier(
            &separable(20, Aspect::Politeness),
            Aspect::Politeness,
            &ClassifierTrainConfig { max_epochs: 30, ..Default::default() },
        )
        .unwrap();
        let a = trained.classifier.score("c", &ev, "thank you kindly");
        let b = trained.classifier.score("c", &ev, "thank you kindly");
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn scores_stay_strictly_inside_unit_interval() {
        // A margin far past sigmoid saturation must still score < 1.
        let mut c = FeedbackClassifier::zeroed(Aspect::Factuality, 64);
        c.bias = 1e9;
        let s = c.score("x", &[], "y");
        assert!(s > 0.0 && s < 1.0, "got {s}");
        c.bias = -1e9;
        let s = c.score("x", &[], "y");
        assert!(s > 0.0 && s < 1.0, "got {s}");
    }

    #[test]
    fn score_increases_with_margin() {
        // Put positive weight on the bucket of one response token; adding
        // occurrences of that token raises the margin, hence the score.
        let dim = 1 << 10;
        let mut c = FeedbackClassifier::zeroed(Aspect::Refutation, dim);
        let idx = crate::hashing::bucket("r:signal", dim);
        c.weights[idx] = 1.0;
        let s1 = c.score("", &[], "signal");
        let s2 = c.score("", &[], "signal signal");
        assert!(s2 > s1, "{s2} ≤ {s1}");
        assert!(s1 > 0.5);
    }

    #[test]
    fn separable_data_reaches_high_balanced_accuracy() {
        let data = separable(60, Aspect::Refutation);
        let trained = train_classifier(
            &data,
            Aspect::Refutation,
            &ClassifierTrainConfig { seed: 3, ..Default::default() },
        )
        .unwrap();
        assert!(
            trained.metrics.balanced_accuracy >= 0.95,
            "held-out BA {} below 0.95",
            trained.metrics.balanced_accuracy
        );
        assert!(trained.test_size >= 20);
    }

    /// On a 90/10 set whose positive marker also appears in some negatives,
    /// plain cross entropy defaults to the majority class; class balancing
    /// recovers the minority.
    #[test]
    fn class_balancing_beats_plain_loss_on_imbalanced_data() {
        let mut data = Vec::new();
        for i in 0..20 {
            data.push(example(
                Aspect::Factuality,
                1,
                &format!("marker common filler{} tail", i % 5),
            ));
        }
        for i in 0..180 {
            let response = if i % 7 == 0 {
                // Noisy negatives share the positive marker.
                format!("marker common filler{} tail", i % 5)
            } else {
                format!("common filler{} tail", i % 5)
            };
            data.push(example(Aspect::Factuality, 0, &response));
        }
        let base = ClassifierTrainConfig { seed: 11, max_epochs: 80, ..Default::default() };
        let balanced = train_classifier(&data, Aspect::Factuality, &base).unwrap();
        let plain = train_classifier(
            &data,
            Aspect::Factuality,
            &ClassifierTrainConfig { balanced: false, ..base },
        )
        .unwrap();
        assert!(
            balanced.metrics.balanced_accuracy > plain.metrics.balanced_accuracy,
            "balanced {} ≤ plain {}",
            balanced.metrics.balanced_accuracy,
            plain.metrics.balanced_accuracy
        );
    }

    #[test]
    fn single_class_and_mixed_aspect_data_are_rejected() {
        let all_pos: Vec<FeedbackExample> =
            (0..10).map(|_| example(Aspect::Politeness, 1, "fine")).collect();
        assert!(matches!(
            train_classifier(&all_pos, Aspect::Politeness, &Default::default()),
            Err(RewardError::SingleClass)
        ));

        let mut mixed = separable(5, Aspect::Politeness);
        mixed[3].aspect = Aspect::Factuality;
        assert!(matches!(
            train_classifier(&mixed, Aspect::Politeness, &Default::default()),
            Err(RewardError::MixedAspects { .. })
        ));

        assert!(matches!(
            train_classifier(&[], Aspect::Politeness, &Default::default()),
            Err(RewardError::EmptyDataset)
        ));
    }

    #[test]
    fn stratified_split_is_seeded_and_keeps_both_classes() {
        let data = separable(25, Aspect::Refutation);
        let cfg = ClassifierTrainConfig { seed: 42, ..Default::default() };
        let (train_a, test_a) = stratified_split(&data, &cfg).unwrap();
        let (train_b, test_b) = stratified_split(&data, &cfg).unwrap();
        let ids = |v: &[&FeedbackExample]| {
            v.iter().map(|e| (e.label, e.response.clone())).collect::<Vec<_>>()
        };
        assert_eq!(ids(&train_a), ids(&train_b));
        assert_eq!(ids(&test_a), ids(&test_b));
        for side in [&train_a, &test_a] {
            assert!(side.iter().any(|e| e.label == 1) && side.iter().any(|e| e.label == 0));
        }
        // Held-out fraction per class ≈ 20%.
        assert_eq!(test_a.iter().filter(|e| e.label == 1).count(), 5);
        assert_eq!(test_a.iter().filter(|e| e.label == 0).count(), 5);

        let different = stratified_split(
            &data,
            &ClassifierTrainConfig { seed: 43, ..Default::default() },
        )
        .unwrap();
        assert_ne!(ids(&test_a), ids(&different.1), "different seed, different split");
    }

    #[test]
    fn balanced_accuracy_closed_forms() {
        let t = true;
        let f = false;
        assert_eq!(balanced_accuracy(&[t, f, t], &[t, f, t]).unwrap(), 1.0);
        // All-positive predictions on balanced labels: recalls 1 and 0.
        assert_eq!(balanced_accuracy(&[t, t, t, t], &[t, t, f, f]).unwrap(), 0.5);
        // Hand-computed oracle: labels 3 positive / 2 negative,
        // recall+ = 2/3, recall− = 1/2 → BA = 7/12.
        let got = balanced_accuracy(&[t, t, f, f, t], &[t, t, t, f, f]).unwrap();
        assert!((got - 7.0 / 12.0).abs() < 1e-12);

        assert!(matches!(
            balanced_accuracy(&[t, f], &[t, t]),
            Err(RewardError::SingleClass)
        ));
        assert!(matches!(
            balanced_accuracy(&[t], &[t, f]),
            Err(RewardError::LengthMismatch { .. })
        ));
    }
}

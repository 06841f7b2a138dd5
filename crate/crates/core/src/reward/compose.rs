//! Reward composition: the three feedback-classifier scores plus scaled
//! relevance terms from the trained dense scorer.
//!
//!   total = refutation + factuality + politeness
//!         + α · (relevance(claim, response) + max_i relevance(evidence_i, response))
//!
//! By default the relevance terms are cosines mapped to [0, 1] via
//! (cos+1)/2, keeping them commensurate with the classifier scores; the
//! unnormalized cosine/temperature form stays available behind
//! `raw_relevance` for callers that want the scorer's native scale.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classifier::{Aspect, FeedbackClassifier};
use super::RewardError;
use crate::artifact;
use crate::dense::DenseScorer;

const BUNDLE_MAGIC: [u8; 4] = *b"FBCB";
const BUNDLE_VERSION: u32 = 1;

/// Scaling knobs for [`compute_reward`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Scale on the two relevance terms.
    pub alpha: f64,
    /// Use the scorer's native cosine/temperature instead of (cos+1)/2.
    pub raw_relevance: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { alpha: 0.5, raw_relevance: false }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(RewardError::BadConfig(format!(
                "alpha must be finite and ≥ 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// The three trained aspect classifiers the reward needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectClassifiers {
    pub refutation: FeedbackClassifier,
    pub factuality: FeedbackClassifier,
    pub politeness: FeedbackClassifier,
}

impl AspectClassifiers {
    pub fn new(
        refutation: FeedbackClassifier,
        factuality: FeedbackClassifier,
        politeness: FeedbackClassifier,
    ) -> Result<Self, RewardError> {
        for (clf, want) in [
            (&refutation, Aspect::Refutation),
            (&factuality, Aspect::Factuality),
            (&politeness, Aspect::Politeness),
        ] {
            if clf.aspect != want {
                return Err(RewardError::MixedAspects { expected: want, found: clf.aspect });
            }
        }
        Ok(Self { refutation, factuality, politeness })
    }

    pub fn save(&self, path: &Path) -> Result<(), RewardError> {
        artifact::save(path, BUNDLE_MAGIC, BUNDLE_VERSION, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RewardError> {
        let bundle: Self =
            artifact::load(path, BUNDLE_MAGIC, BUNDLE_VERSION, "feedback classifier bundle")?;
        AspectClassifiers::new(bundle.refutation, bundle.factuality, bundle.politeness)
    }
}

/// Every term of a computed reward, so callers can audit the composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardBreakdown {
    pub refutation: f64,
    pub factuality: f64,
    pub politeness: f64,
    /// Relevance of the response to the claim.
    pub claim_relevance: f64,
    /// Max over the evidence set of response relevance.
    pub evidence_relevance: f64,
    pub alpha: f64,
    pub total: f64,
}

fn relevance(scorer: &DenseScorer, a: &str, b: &str, raw: bool) -> f64 {
    if raw {
        scorer.relevance(a, b)
    } else {
        (scorer.cosine(a, b) + 1.0) / 2.0
    }
}

/// Composes the full reward for one (claim, evidence set, response) triple.
pub fn compute_reward(
    classifiers: &AspectClassifiers,
    scorer: &DenseScorer,
    config: &RewardConfig,
    claim: &str,
    evidence: &[String],
    response: &str,
) -> Result<RewardBreakdown, RewardError> {
    config.validate()?;
    if evidence.is_empty() {
        return Err(RewardError::EmptyEvidence);
    }
    let refutation = classifiers.refutation.score(claim, evidence, response);
    let factuality = classifiers.factuality.score(claim, evidence, response);
    let politeness = classifiers.politeness.score(claim, evidence, response);
    let claim_relevance = relevance(scorer, claim, response, config.raw_relevance);
    let evidence_relevance = evidence
        .iter()
        .map(|e| relevance(scorer, e, response, config.raw_relevance))
        .fold(f64::NEG_INFINITY, f64::max);
    let total = refutation
        + factuality
        + politeness
        + config.alpha * (claim_relevance + evidence_relevance);
    Ok(RewardBreakdown {
        refutation,
        factuality,
        politeness,
        claim_relevance,
        evidence_relevance,
        alpha: config.alpha,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::EmbeddingConfig;
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn scorer() -> DenseScorer {
        DenseScorer::new(EmbeddingConfig { dim: 32, ..Default::default() }).unwrap()
    }

    /// Classifiers with fixed biases, so scores are known sigmoids.
    fn biased_classifiers(r: f64, f: f64, p: f64) -> AspectClassifiers {
        let dim = 64;
        AspectClassifiers::new(
            FeedbackClassifier::with_bias(Aspect::Refutation, dim, r),
            FeedbackClassifier::with_bias(Aspect::Factuality, dim, f),
            FeedbackClassifier::with_bias(Aspect::Politeness, dim, p),
        )
        .unwrap()
    }

    fn ev(texts: &[&str]) -> Vec<String> {
        texts.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn alpha_zero_totals_the_classifier_scores() {
        let classifiers = biased_classifiers(0.3, -0.7, 1.1);
        let config = RewardConfig { alpha: 0.0, ..Default::default() };
        let b = compute_reward(
            &classifiers,
            &scorer(),
            &config,
            "claim",
            &ev(&["evidence a", "evidence b"]),
            "response",
        )
        .unwrap();
        let expected = b.refutation + b.factuality + b.politeness;
        assert!((b.total - expected).abs() < 1e-12);
    }

    #[test]
    fn saturated_classifiers_with_alpha_zero_total_three() {
        let classifiers = biased_classifiers(1e9, 1e9, 1e9);
        let config = RewardConfig { alpha: 0.0, ..Default::default() };
        let b = compute_reward(&classifiers, &scorer(), &config, "c", &ev(&["e"]), "r").unwrap();
        assert!((b.total - 3.0).abs() < 1e-12, "got {}", b.total);
    }

    /// Independent term-by-term evaluation of the composition formula.
    #[test]
    fn matches_term_by_term_oracle() {
        let classifiers = biased_classifiers(0.4, -0.2, 0.9);
        let s = scorer();
        let config = RewardConfig { alpha: 0.7, raw_relevance: false };
        let claim = "virus spreads through droplets";
        let evidence = ev(&["droplet transmission study", "surface persistence data"]);
        let response = "the evidence supports droplet transmission";
        let b =
            compute_reward(&classifiers, &s, &config, claim, &evidence, response).unwrap();

        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let rel = |a: &str| (s.cosine(a, response) + 1.0) / 2.0;
        let expected = sig(0.4)
            + sig(-0.2)
            + sig(0.9)
            + 0.7 * (rel(claim) + evidence.iter().map(|e| rel(e)).fold(f64::MIN, f64::max));
        assert!((b.total - expected).abs() < 1e-10, "{} vs {expected}", b.total);
        assert!((b.claim_relevance - rel(claim)).abs() < 1e-12);
    }

    #[test]
    fn raw_relevance_uses_scorer_native_scale() {
        let classifiers = biased_classifiers(0.0, 0.0, 0.0);
        let s = scorer();
        let claim = "alpha beta";
        let evidence = ev(&["alpha beta gamma"]);
        let response = "alpha beta";
        let raw = compute_reward(
            &classifiers,
            &s,
            &RewardConfig { alpha: 1.0, raw_relevance: true },
            claim,
            &evidence,
            response,
        )
        .unwrap();
        assert!((raw.claim_relevance - s.relevance(claim, response)).abs() < 1e-12);
        // Identical texts: cosine 1, native scale = 1/temperature = 20.
        assert!((raw.claim_relevance - 20.0).abs() < 1e-9);

        let norm = compute_reward(
            &classifiers,
            &s,
            &RewardConfig { alpha: 1.0, raw_relevance: false },
            claim,
            &evidence,
            response,
        )
        .unwrap();
        assert!((norm.claim_relevance - 1.0).abs() < 1e-12, "(1+1)/2");
        assert!((0.0..=1.0).contains(&norm.evidence_relevance));
    }

    #[test]
    fn empty_evidence_is_rejected() {
        let classifiers = biased_classifiers(0.0, 0.0, 0.0);
        assert!(matches!(
            compute_reward(&classifiers, &scorer(), &Default::default(), "c", &[], "r"),
            Err(RewardError::EmptyEvidence)
        ));
    }

    #[test]
    fn invalid_alpha_is_rejected() {
        let classifiers = biased_classifiers(0.0, 0.0, 0.0);
        for alpha in [-0.1, f64::NAN, f64::INFINITY] {
            let config = RewardConfig { alpha, ..Default::default() };
            assert!(compute_reward(
                &classifiers,
                &scorer(),
                &config,
                "c",
                &ev(&["e"]),
                "r"
            )
            .is_err());
        }
    }

    #[test]
    fn raising_one_classifier_score_raises_total() {
        let s = scorer();
        let low = biased_classifiers(0.2, 0.2, -0.5);
        let high = biased_classifiers(0.2, 0.2, 0.5);
        let config = RewardConfig::default();
        let args = ("claim text", ev(&["evidence text"]), "response text");
        let a = compute_reward(&low, &s, &config, args.0, &args.1, args.2).unwrap();
        let b = compute_reward(&high, &s, &config, args.0, &args.1, args.2).unwrap();
        assert!(b.politeness > a.politeness);
        assert_eq!(a.refutation, b.refutation);
        assert_eq!(a.claim_relevance, b.claim_relevance);
        assert!(b.total > a.total);
    }

    #[test]
    fn raising_alpha_with_positive_relevance_raises_total() {
        let classifiers = biased_classifiers(0.1, 0.1, 0.1);
        let s = scorer();
        let args = ("shared words here", ev(&["shared words evidence"]), "shared words reply");
        let lo = compute_reward(
            &classifiers,
            &s,
            &RewardConfig { alpha: 0.2, ..Default::default() },
            args.0,
            &args.1,
            args.2,
        )
        .unwrap();
        let hi = compute_reward(
            &classifiers,
            &s,
            &RewardConfig { alpha: 0.9, ..Default::default() },
            args.0,
            &args.1,
            args.2,
        )
        .unwrap();
        assert!(lo.claim_relevance + lo.evidence_relevance > 0.0);
        assert!(hi.total > lo.total);
    }

    #[test]
    fn adding_evidence_never_decreases_evidence_relevance() {
        let classifiers = biased_classifiers(0.0, 0.0, 0.0);
        let s = scorer();
        let config = RewardConfig::default();
        let base = ev(&["first evidence", "second evidence"]);
        let more = ev(&["first evidence", "second evidence", "third unseen evidence"]);
        let a = compute_reward(&classifiers, &s, &config, "c", &base, "the response").unwrap();
        let b = compute_reward(&classifiers, &s, &config, "c", &more, "the response").unwrap();
        assert!(b.evidence_relevance >= a.evidence_relevance);
    }

    #[test]
    fn bundle_round_trips_and_rejects_swapped_aspects() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("classifiers.bin");
        let bundle = biased_classifiers(0.5, -0.5, 1.5);
        bundle.save(&path).unwrap();
        let loaded = AspectClassifiers::load(&path).unwrap();
        assert_eq!(bundle, loaded);

        let swapped = AspectClassifiers::new(
            FeedbackClassifier::zeroed(Aspect::Factuality, 16),
            FeedbackClassifier::zeroed(Aspect::Refutation, 16),
            FeedbackClassifier::zeroed(Aspect::Politeness, 16),
        );
        assert!(matches!(swapped, Err(RewardError::MixedAspects { .. })));
    }

    proptest! {
        /// Additivity invariant on randomized inputs.
        #[test]
        fn breakdown_is_additive(
            r in -3.0f64..3.0,
            f in -3.0f64..3.0,
            p in -3.0f64..3.0,
            alpha in 0.0f64..4.0,
            claim_words in proptest::collection::vec(0u32..50, 1..6),
            resp_words in proptest::collection::vec(0u32..50, 1..6),
        ) {
            let classifiers = biased_classifiers(r, f, p);
            let s = scorer();
            let claim: Vec<String> = claim_words.iter().map(|w| format!("w{w}")).collect();
            let response: Vec<String> = resp_words.iter().map(|w| format!("w{w}")).collect();
            let config = RewardConfig { alpha, ..Default::default() };
            let b = compute_reward(
                &classifiers,
                &s,
                &config,
                &claim.join(" "),
                &ev(&["evidence one", "different evidence"]),
                &response.join(" "),
            ).unwrap();
            let reassembled = b.refutation + b.factuality + b.politeness
                + b.alpha * (b.claim_relevance + b.evidence_relevance);
            prop_assert!((b.total - reassembled).abs() < 1e-9);
            prop_assert!(b.refutation > 0.0 && b.refutation < 1.0);
            prop_assert!(b.factuality > 0.0 && b.factuality < 1.0);
            prop_assert!(b.politeness > 0.0 && b.politeness < 1.0);
        }
    }
}

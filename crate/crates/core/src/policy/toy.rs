//! A self-contained response environment for exercising the alignment loop
//! at desk scale: a fixed menu of response templates with known payoffs.
//!
//! Each template is registered as one atomic vocabulary token, so a
//! single-action policy chooses among whole responses; anything that is not
//! an exact template match earns zero. Prompts contribute their trailing
//! word to the vocabulary so the policy can condition on which prompt it is
//! answering.

use serde::{Deserialize, Serialize};

use super::{Policy, PolicyError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyEnvSpec {
    /// Candidate responses, each a distinct single-space-normalized string.
    pub templates: Vec<String>,
    /// Payoff for emitting the same-index template verbatim.
    pub rewards: Vec<f64>,
    pub prompts: Vec<String>,
}

fn normalized(text: &str) -> bool {
    !text.is_empty() && text == text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl ToyEnvSpec {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: String| Err(PolicyError::BadConfig(m));
        if self.templates.is_empty() {
            return bad("environment needs at least one template".into());
        }
        if self.templates.len() != self.rewards.len() {
            return bad(format!(
                "{} templates but {} rewards",
                self.templates.len(),
                self.rewards.len()
            ));
        }
        for (i, t) in self.templates.iter().enumerate() {
            if !normalized(t) {
                return bad(format!(
                    "template {i} must be non-empty and single-space-normalized: {t:?}"
                ));
            }
            if self.templates[..i].contains(t) {
                return bad(format!("duplicate template: {t:?}"));
            }
        }
        if let Some(r) = self.rewards.iter().find(|r| !r.is_finite()) {
            return bad(format!("rewards must be finite, got {r}"));
        }
        if self.prompts.is_empty() || self.prompts.iter().any(|p| p.trim().is_empty()) {
            return bad("environment needs non-empty prompts".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| PolicyError::BadConfig(format!("environment JSON: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment spec serializes")
    }

    /// Vocabulary for policies in this environment: every template as one
    /// atomic token, plus each prompt's trailing word (so distinct prompts
    /// map to distinct decision states), deduplicated in order.
    pub fn policy_vocab(&self) -> Vec<String> {
        let mut vocab = self.templates.clone();
        for prompt in &self.prompts {
            if let Some(marker) = prompt.split_whitespace().last() {
                if !vocab.iter().any(|t| t == marker) {
                    vocab.push(marker.to_string());
                }
            }
        }
        vocab
    }

    /// Payoff for a response: the matching template's reward, else zero.
    pub fn reward(&self, response: &str) -> f64 {
        self.templates
            .iter()
            .position(|t| t == response)
            .map_or(0.0, |i| self.rewards[i])
    }

    /// The environment's payoff as a rollout reward function.
    pub fn reward_fn(&self) -> impl Fn(&str, &str) -> Result<f64, String> + '_ {
        move |_prompt: &str, response: &str| Ok(self.reward(response))
    }

    pub fn max_reward(&self) -> f64 {
        self.rewards.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    pub fn best_template(&self) -> &str {
        let best = self
            .rewards
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("validated spec has templates");
        &self.templates[best]
    }

    /// A uniform single-action policy over this environment's vocabulary.
    pub fn uniform_policy(&self) -> Result<Policy, PolicyError> {
        Policy::new(self.policy_vocab(), 1)
    }

    /// A randomly-preferenced single-action policy, for use as a frozen
    /// reference with non-degenerate behavior.
    pub fn reference_policy(&self, seed: u64, scale: f64) -> Result<Policy, PolicyError> {
        Policy::with_random_logits(self.policy_vocab(), 1, seed, scale)
    }

    /// The standing desk-scale instance: 50 templates whose payoffs are an
    /// evenly spaced grid over [0, 1], assigned in a seed-determined order,
    /// and five prompts with distinct trailing markers.
    pub fn desk_default(seed: u64) -> Self {
        use rand::seq::SliceRandom;
        use rand_chacha::rand_core::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        let n = 50usize;
        let templates: Vec<String> =
            (0..n).map(|i| format!("the panel returns verdict {i} here")).collect();
        let mut rewards: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rewards.shuffle(&mut rng);
        let prompts = ["first", "second", "third", "fourth", "fifth"]
            .iter()
            .map(|m| format!("assess the submitted claim number {m}"))
            .collect();
        Self { templates, rewards, prompts }
    }
}

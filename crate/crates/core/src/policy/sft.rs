//! Supervised fine-tuning: fits the policy to demonstration responses by
//! cross entropy, conditioned on the rendered prompt. The result is frozen
//! by convention and serves as the reference policy for alignment.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Policy, PolicyError};
use crate::optim::AdamW;
use crate::orchestrate::PromptTemplate;

/// One demonstration triple for supervised fine-tuning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub claim: String,
    pub evidence: Vec<String>,
    pub response: String,
}

/// Full-batch training is deterministic, so no seed is needed.
#[derive(Debug, Clone)]
pub struct SftConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SftConfig {
    fn default() -> Self {
        Self { epochs: 50, learning_rate: 0.5 }
    }
}

impl SftConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.epochs == 0 {
            return Err(PolicyError::BadConfig("epochs must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(PolicyError::BadConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// The fine-tuned policy with its mean cross entropy per epoch (measured on
/// the forward pass, before that epoch's update).
#[derive(Debug)]
pub struct SftOutcome {
    pub policy: Policy,
    pub loss_trace: Vec<f64>,
}

/// Cross-entropy training on demonstration tokens conditioned on the
/// rendered prompt. An end-of-sequence target is appended whenever the
/// response leaves room under the length cap, so the policy also learns to
/// stop.
pub fn supervised_finetune(
    mut policy: Policy,
    demonstrations: &[Demonstration],
    template: &PromptTemplate,
    config: &SftConfig,
) -> Result<SftOutcome, PolicyError> {
    config.validate()?;
    if demonstrations.is_empty() {
        return Err(PolicyError::EmptyDemonstrations);
    }

    // (start state, target actions) per demonstration.
    let mut encoded = Vec::with_capacity(demonstrations.len());
    for demo in demonstrations {
        let prompt = template
            .render(&demo.claim, &demo.evidence)
            .map_err(|e| PolicyError::BadConfig(format!("prompt render: {e}")))?;
        let mut actions = policy.encode(&demo.response)?;
        if actions.len() > policy.max_length() {
            return Err(PolicyError::TooLong {
                length: actions.len(),
                max: policy.max_length(),
            });
        }
        if actions.len() < policy.max_length() {
            actions.push(policy.eos_id());
        }
        encoded.push((policy.initial_state(&prompt), actions));
    }
    let total_tokens: usize = encoded.iter().map(|(_, a)| a.len()).sum();

    let n_states = policy.num_states();
    let mut opt = AdamW::new(n_states * n_states, 0.0);
    let mut grads: Array2<f64> = Array2::zeros((n_states, n_states));
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        grads.fill(0.0);
        let mut loss = 0.0;
        for (start, actions) in &encoded {
            let mut state = *start;
            for &action in actions {
                let log_probs = policy.log_probs(state);
                loss -= log_probs[action];
                // ∂(−log softmax)/∂logits = softmax − onehot.
                let mut grad_row = grads.row_mut(state);
                for (a, &lp) in log_probs.iter().enumerate() {
                    grad_row[a] += lp.exp() / total_tokens as f64;
                }
                grad_row[action] -= 1.0 / total_tokens as f64;
                if action != policy.eos_id() {
                    state = action;
                }
            }
        }
        loss /= total_tokens as f64;
        if !loss.is_finite() {
            return Err(PolicyError::NonFinite {
                context: format!("supervised fine-tuning loss at epoch {epoch}"),
            });
        }
        loss_trace.push(loss);
        opt.step(
            policy.logits_mut().as_slice_mut().expect("logits are contiguous"),
            grads.as_slice().expect("gradients are contiguous"),
            config.learning_rate,
        );
    }

    Ok(SftOutcome { policy, loss_trace })
}

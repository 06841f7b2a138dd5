//! Desk-scale response policy and its alignment stack: a token-bigram
//! softmax language model, supervised fine-tuning to build a reference
//! policy, seeded rollouts, and KL-regularized PPO against the composite
//! reward.
//!
//! The policy is deliberately tiny — next-token logits conditioned only on
//! the previous token — so that sequence-level quantities (exact KL,
//! gradient directions, optimal rewards) are computable in closed form and
//! every optimization claim can be checked against an oracle. The interfaces
//! are the extension point for real generation backends.

mod align;
mod ppo;
mod rollout;
mod sft;
mod toy;

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError};
use crate::dense::standard_normal;

pub use align::{align, write_curve_csv, AlignConfig, AlignOutcome, CurvePoint};
pub use ppo::{ppo_update, PpoConfig, PpoStats};
pub use rollout::{rollout, RewardFn, RolloutBatch, Trajectory};
pub use sft::{supervised_finetune, Demonstration, SftConfig, SftOutcome};
pub use toy::ToyEnvSpec;

const POLICY_MAGIC: [u8; 4] = *b"POLC";
const POLICY_VERSION: u32 = 1;
const ACTOR_MAGIC: [u8; 4] = *b"ACTC";
const ACTOR_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy config: {0}")]
    BadConfig(String),
    #[error("policies disagree on vocabulary or max length")]
    PolicyMismatch,
    #[error("text contains no vocabulary match starting at {word:?}")]
    OutOfVocabulary { word: String },
    #[error("sequence has {length} tokens; the policy caps generation at {max}")]
    TooLong { length: usize, max: usize },
    #[error("malformed action sequence: {0}")]
    MalformedSequence(String),
    #[error("demonstration set is empty")]
    EmptyDemonstrations,
    #[error("prompt set is empty")]
    EmptyPrompts,
    #[error("no valid trajectories: all {invalid} rollouts failed reward computation")]
    NoValidTrajectories { invalid: usize },
    #[error("trajectory batch is empty")]
    EmptyTrajectories,
    #[error("non-finite value during training ({context})")]
    NonFinite { context: String },
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

/// Serialized policy payload.
#[derive(Serialize, Deserialize)]
struct PolicyCheckpoint {
    vocab: Vec<String>,
    max_length: usize,
    logits: Array2<f64>,
}

/// Serialized actor payload: policy plus value head.
#[derive(Serialize, Deserialize)]
struct ActorCheckpoint {
    policy: PolicyCheckpoint,
    values: Vec<f64>,
}

/// A first-order (token-bigram) autoregressive policy: a learned logits
/// table over (previous token → next token), softmax-normalized per state.
///
/// States are the `n` vocabulary tokens plus a begin-of-sequence state
/// (id `n`); actions are the `n` tokens plus an end-of-sequence action
/// (id `n`). Generation walks states until it samples end-of-sequence or
/// hits `max_length` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    vocab: Vec<String>,
    lookup: HashMap<String, usize>,
    /// (n+1 states) × (n+1 actions).
    logits: Array2<f64>,
    max_length: usize,
}

impl Policy {
    /// A uniform policy (zero logits) over `vocab`.
    pub fn new(vocab: Vec<String>, max_length: usize) -> Result<Self, PolicyError> {
        let n = vocab.len();
        Self::from_parts(vocab, max_length, Array2::zeros((n + 1, n + 1)))
    }

    /// A policy with logits drawn from N(0, scale²) — distinct preferences
    /// in every state, useful as a non-degenerate frozen reference.
    pub fn with_random_logits(
        vocab: Vec<String>,
        max_length: usize,
        seed: u64,
        scale: f64,
    ) -> Result<Self, PolicyError> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(PolicyError::BadConfig(format!("scale must be ≥ 0, got {scale}")));
        }
        let n = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits =
            Array2::from_shape_fn((n + 1, n + 1), |_| scale * standard_normal(&mut rng));
        Self::from_parts(vocab, max_length, logits)
    }

    fn from_parts(
        vocab: Vec<String>,
        max_length: usize,
        logits: Array2<f64>,
    ) -> Result<Self, PolicyError> {
        if vocab.is_empty() {
            return Err(PolicyError::BadConfig("vocabulary is empty".into()));
        }
        if max_length < 1 {
            return Err(PolicyError::BadConfig("max_length must be ≥ 1".into()));
        }
        let mut lookup = HashMap::with_capacity(vocab.len());
        for (id, token) in vocab.iter().enumerate() {
            let normalized = token.split_whitespace().collect::<Vec<_>>().join(" ");
            if normalized != *token || token.is_empty() {
                return Err(PolicyError::BadConfig(format!(
                    "token {token:?} must be non-empty and single-space normalized"
                )));
            }
            if lookup.insert(token.clone(), id).is_some() {
                return Err(PolicyError::BadConfig(format!("duplicate token {token:?}")));
            }
        }
        let n = vocab.len();
        if logits.dim() != (n + 1, n + 1) {
            return Err(PolicyError::BadConfig(format!(
                "logits shape {:?} does not match vocabulary size {n}",
                logits.dim()
            )));
        }
        if logits.iter().any(|x| !x.is_finite()) {
            return Err(PolicyError::BadConfig("logits contain non-finite values".into()));
        }
        Ok(Self { vocab, lookup, logits, max_length })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    /// End-of-sequence action id (also the begin-of-sequence state id).
    pub fn eos_id(&self) -> usize {
        self.vocab.len()
    }

    pub fn bos_state(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_states(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn token_id(&self, token: &str) -> Option<usize> {
        self.lookup.get(token).copied()
    }

    pub(crate) fn logits(&self) -> &Array2<f64> {
        &self.logits
    }

    pub(crate) fn logits_mut(&mut self) -> &mut Array2<f64> {
        &mut self.logits
    }

    pub(crate) fn compatible_with(&self, other: &Policy) -> bool {
        self.vocab == other.vocab && self.max_length == other.max_length
    }

    /// The state generation starts from: the last whitespace-delimited word
    /// of the prompt that is in vocabulary, or begin-of-sequence when none
    /// is. Prompts thus condition generation through trailing marker words.
    pub fn initial_state(&self, prompt: &str) -> usize {
        prompt
            .split_whitespace()
            .rev()
            .find_map(|w| self.lookup.get(w).copied())
            .unwrap_or_else(|| self.bos_state())
    }

    /// Log-probabilities of every action in `state` (log-softmax row).
    pub fn log_probs(&self, state: usize) -> Array1<f64> {
        let row = self.logits.row(state);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let log_z = row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln() + max;
        row.mapv(|x| x - log_z)
    }

    /// Probabilities of every action in `state` (softmax row).
    pub fn probs(&self, state: usize) -> Array1<f64> {
        self.log_probs(state).mapv(f64::exp)
    }

    pub fn token_logprob(&self, state: usize, action: usize) -> f64 {
        self.log_probs(state)[action]
    }

    /// Ties resolve to the lowest action id, so greedy decoding is total.
    pub fn greedy_action(&self, state: usize) -> usize {
        let row = self.logits.row(state);
        let mut best = 0;
        for (i, &x) in row.iter().enumerate() {
            if x > row[best] {
                best = i;
            }
        }
        best
    }

    pub fn sample_action(&self, state: usize, rng: &mut ChaCha8Rng) -> usize {
        use rand::Rng;
        let probs = self.probs(state);
        let r: f64 = rng.random();
        let mut cumulative = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            cumulative += p;
            if r < cumulative {
                return i;
            }
        }
        probs.len() - 1
    }

    fn generate_with(&self, prompt: &str, mut pick: impl FnMut(&Self, usize) -> usize) -> Vec<usize> {
        let mut state = self.initial_state(prompt);
        let mut actions = Vec::new();
        while actions.len() < self.max_length {
            let action = pick(self, state);
            actions.push(action);
            if action == self.eos_id() {
                break;
            }
            state = action;
        }
        actions
    }

    /// Greedy decode: highest-probability action at every step.
    pub fn generate_greedy(&self, prompt: &str) -> Vec<usize> {
        self.generate_with(prompt, |p, s| p.greedy_action(s))
    }

    /// Seeded ancestral sampling.
    pub fn generate_sampled(&self, prompt: &str, rng: &mut ChaCha8Rng) -> Vec<usize> {
        self.generate_with(prompt, |p, s| p.sample_action(s, rng))
    }

    /// Log-probability of emitting `actions` after `prompt`. Actions may end
    /// with end-of-sequence; it cannot appear earlier.
    pub fn sequence_logprob(&self, prompt: &str, actions: &[usize]) -> Result<f64, PolicyError> {
        if actions.len() > self.max_length {
            return Err(PolicyError::TooLong { length: actions.len(), max: self.max_length });
        }
        let mut state = self.initial_state(prompt);
        let mut total = 0.0;
        for (i, &action) in actions.iter().enumerate() {
            if action > self.eos_id() {
                return Err(PolicyError::MalformedSequence(format!(
                    "action id {action} out of range"
                )));
            }
            if action == self.eos_id() && i + 1 != actions.len() {
                return Err(PolicyError::MalformedSequence(
                    "end-of-sequence before the final position".into(),
                ));
            }
            total += self.token_logprob(state, action);
            if action != self.eos_id() {
                state = action;
            }
        }
        Ok(total)
    }

    /// Tokenizes `text` into vocabulary ids by greedy longest match over
    /// whitespace words (vocabulary entries may span several words).
    pub fn encode(&self, text: &str) -> Result<Vec<usize>, PolicyError> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let max_words =
            self.vocab.iter().map(|t| t.split(' ').count()).max().unwrap_or(1);
        let mut ids = Vec::new();
        let mut pos = 0;
        'outer: while pos < words.len() {
            let longest = max_words.min(words.len() - pos);
            for take in (1..=longest).rev() {
                let candidate = words[pos..pos + take].join(" ");
                if let Some(&id) = self.lookup.get(&candidate) {
                    ids.push(id);
                    pos += take;
                    continue 'outer;
                }
            }
            return Err(PolicyError::OutOfVocabulary { word: words[pos].to_string() });
        }
        Ok(ids)
    }

    /// Renders actions back to text; the end-of-sequence action is dropped.
    pub fn decode(&self, actions: &[usize]) -> String {
        actions
            .iter()
            .filter(|&&a| a != self.eos_id())
            .map(|&a| self.vocab[a].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let payload = PolicyCheckpoint {
            vocab: self.vocab.clone(),
            max_length: self.max_length,
            logits: self.logits.clone(),
        };
        artifact::save(path, POLICY_MAGIC, POLICY_VERSION, &payload)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let payload: PolicyCheckpoint =
            artifact::load(path, POLICY_MAGIC, POLICY_VERSION, "policy checkpoint")?;
        Self::from_parts(payload.vocab, payload.max_length, payload.logits)
    }
}

/// The trainable side of alignment: a policy plus a scalar value head
/// (one baseline estimate per conditioning state).
#[derive(Debug, Clone, PartialEq)]
pub struct ActorPolicy {
    pub policy: Policy,
    values: Vec<f64>,
}

impl ActorPolicy {
    /// Initializes the actor from a frozen reference: identical generation
    /// weights, zeroed value head.
    pub fn from_reference(reference: &Policy) -> Self {
        let values = vec![0.0; reference.num_states()];
        Self { policy: reference.clone(), values }
    }

    pub fn value(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let payload = ActorCheckpoint {
            policy: PolicyCheckpoint {
                vocab: self.policy.vocab.clone(),
                max_length: self.policy.max_length,
                logits: self.policy.logits.clone(),
            },
            values: self.values.clone(),
        };
        artifact::save(path, ACTOR_MAGIC, ACTOR_VERSION, &payload)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let payload: ActorCheckpoint =
            artifact::load(path, ACTOR_MAGIC, ACTOR_VERSION, "actor checkpoint")?;
        let policy =
            Policy::from_parts(payload.policy.vocab, payload.policy.max_length, payload.policy.logits)?;
        if payload.values.len() != policy.num_states() {
            return Err(PolicyError::BadConfig(format!(
                "value head has {} entries for {} states",
                payload.values.len(),
                policy.num_states()
            )));
        }
        if payload.values.iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::BadConfig("value head contains non-finite values".into()));
        }
        Ok(Self { policy, values: payload.values })
    }
}

/// Exact KL(actor ‖ reference) between the two sequence distributions
/// induced from `prompt`, by dynamic programming over (state, steps-taken):
///
///   KL(s, d) = Σ_a π_act(a|s) · [log π_act(a|s) − log π_ref(a|s)
///                                 + KL(a, d+1) if a continues]
///
/// This is the chain-rule decomposition of the sequence-level divergence,
/// so it is exact for any vocabulary size and length cap.
pub fn exact_sequence_kl(
    actor: &Policy,
    reference: &Policy,
    prompt: &str,
) -> Result<f64, PolicyError> {
    if !actor.compatible_with(reference) {
        return Err(PolicyError::PolicyMismatch);
    }
    let n_states = actor.num_states();
    let max_len = actor.max_length;
    // kl[d][s]: remaining KL with d actions already taken, in state s.
    let mut next = vec![0.0f64; n_states];
    for depth in (0..max_len).rev() {
        let mut current = vec![0.0f64; n_states];
        for state in 0..n_states {
            let p = actor.probs(state);
            let lp = actor.log_probs(state);
            let lq = reference.log_probs(state);
            let mut sum = 0.0;
            for action in 0..n_states {
                let mut term = lp[action] - lq[action];
                if action != actor.eos_id() && depth + 1 < max_len {
                    term += next[action];
                }
                sum += p[action] * term;
            }
            current[state] = sum;
        }
        next = current;
    }
    Ok(next[actor.initial_state(prompt)])
}

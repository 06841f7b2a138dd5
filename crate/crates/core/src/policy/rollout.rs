//! Seeded trajectory sampling from the actor, scoring each decoded response
//! with a caller-supplied reward function and recording everything the PPO
//! update needs: both policies' logprobs, per-token KL contributions, and
//! value-head baselines.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ActorPolicy, Policy, PolicyError};
use crate::hashing::mix_seed;

/// Scores a decoded response in its prompt's context. An `Err` marks the
/// trajectory invalid (it is excluded and counted, not fatal).
pub type RewardFn<'a> = dyn Fn(&str, &str) -> Result<f64, String> + 'a;

/// One sampled generation with everything needed to optimize against it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub prompt: String,
    /// Decoded response (end-of-sequence dropped).
    pub response: String,
    /// Sampled action ids, including a terminal end-of-sequence when one was
    /// sampled before the length cap.
    pub tokens: Vec<usize>,
    pub actor_logprobs: Vec<f64>,
    pub ref_logprobs: Vec<f64>,
    /// Realized-token KL contribution per step:
    /// `actor_logprobs[t] − ref_logprobs[t]`.
    pub per_token_kl: Vec<f64>,
    /// Actor value-head estimate at each decision state.
    pub values: Vec<f64>,
    pub terminal_reward: f64,
}

impl Trajectory {
    /// Sequence-level KL estimate: the sum of per-token contributions.
    pub fn kl_sum(&self) -> f64 {
        self.per_token_kl.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Valid trajectories plus the count of rollouts dropped because reward
/// computation failed (or returned a non-finite value).
#[derive(Debug)]
pub struct RolloutBatch {
    pub trajectories: Vec<Trajectory>,
    pub invalid: usize,
}

/// Samples one trajectory per prompt from the actor. Each prompt gets its
/// own RNG stream derived from (`seed`, prompt position), so rollouts are
/// reproducible and order-independent.
pub fn rollout(
    actor: &ActorPolicy,
    reference: &Policy,
    prompts: &[String],
    reward_fn: &RewardFn,
    seed: u64,
) -> Result<RolloutBatch, PolicyError> {
    if prompts.is_empty() {
        return Err(PolicyError::EmptyPrompts);
    }
    if !actor.policy.compatible_with(reference) {
        return Err(PolicyError::PolicyMismatch);
    }

    let policy = &actor.policy;
    let mut trajectories = Vec::with_capacity(prompts.len());
    let mut invalid = 0usize;
    for (i, prompt) in prompts.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let mut state = policy.initial_state(prompt);
        let mut tokens = Vec::new();
        let mut actor_logprobs = Vec::new();
        let mut ref_logprobs = Vec::new();
        let mut per_token_kl = Vec::new();
        let mut values = Vec::new();
        while tokens.len() < policy.max_length() {
            let action = policy.sample_action(state, &mut rng);
            let alp = policy.token_logprob(state, action);
            let rlp = reference.token_logprob(state, action);
            tokens.push(action);
            actor_logprobs.push(alp);
            ref_logprobs.push(rlp);
            per_token_kl.push(alp - rlp);
            values.push(actor.value(state));
            if action == policy.eos_id() {
                break;
            }
            state = action;
        }
        let response = policy.decode(&tokens);
        match reward_fn(prompt, &response) {
            Ok(reward) if reward.is_finite() => trajectories.push(Trajectory {
                prompt: prompt.clone(),
                response,
                tokens,
                actor_logprobs,
                ref_logprobs,
                per_token_kl,
                values,
                terminal_reward: reward,
            }),
            _ => invalid += 1,
        }
    }
    Ok(RolloutBatch { trajectories, invalid })
}

//! Clipped-surrogate policy optimization with KL-shaped rewards.
//!
//! Shaping: each step's reward is −β·(per-token KL), with the terminal
//! reward added at the final step — the sequence-level objective
//! `reward − β·KL` decomposed per token. Advantages come from generalized
//! advantage estimation against the value head and are whitened across the
//! batch; the policy loss is the standard clipped surrogate; the value head
//! regresses on empirical returns. A non-finite loss aborts the update and
//! rolls the parameters back.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::rollout::Trajectory;
use super::{ActorPolicy, PolicyError};
use crate::hashing::mix_seed;
use crate::optim::AdamW;

const VALUE_LOSS_COEF: f64 = 0.5;
const WHITEN_EPS: f64 = 1e-8;

/// PPO hyperparameters. Defaults: β = 0.2 initial KL coefficient,
/// clip ratio ε = 0.2, learning rate 1e-5, 1–3 epochs, batch 4–32
/// trajectories, 4-step gradient accumulation, γ = 1.0, GAE λ = 0.95.
#[derive(Debug, Clone)]
pub struct PpoConfig {
    /// KL-penalty coefficient β.
    pub beta: f64,
    /// Surrogate clip width ε.
    pub clip_ratio: f64,
    pub learning_rate: f64,
    /// Optimization epochs over the batch (1–3).
    pub epochs: usize,
    /// Trajectories per minibatch (4–32).
    pub batch_size: usize,
    /// Minibatches whose gradients are averaged before each optimizer step.
    pub gradient_accumulation: usize,
    /// Return discount γ.
    pub discount: f64,
    pub gae_lambda: f64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            beta: 0.2,
            clip_ratio: 0.2,
            learning_rate: 1e-5,
            epochs: 1,
            batch_size: 8,
            gradient_accumulation: 4,
            discount: 1.0,
            gae_lambda: 0.95,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: String| Err(PolicyError::BadConfig(m));
        if !self.beta.is_finite() || self.beta < 0.0 {
            return bad(format!("beta must be finite and ≥ 0, got {}", self.beta));
        }
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return bad(format!("clip_ratio must be in (0, 1), got {}", self.clip_ratio));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(1..=3).contains(&self.epochs) {
            return bad(format!("epochs must be in 1..=3, got {}", self.epochs));
        }
        if !(4..=32).contains(&self.batch_size) {
            return bad(format!("batch_size must be in 4..=32, got {}", self.batch_size));
        }
        if self.gradient_accumulation == 0 {
            return bad("gradient_accumulation must be ≥ 1".into());
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad(format!("discount must be in [0, 1], got {}", self.discount));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!("gae_lambda must be in [0, 1], got {}", self.gae_lambda));
        }
        Ok(())
    }
}

/// What one update did.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PpoStats {
    /// Mean terminal reward over the batch.
    pub mean_reward: f64,
    /// Mean per-trajectory KL sum (sequence-level estimate).
    pub mean_kl: f64,
    /// Fraction of evaluated steps whose ratio left (1−ε, 1+ε).
    pub clip_fraction: f64,
    /// True when a non-finite loss rolled the update back.
    pub aborted: bool,
}

/// One optimizable step: everything constant during the update except the
/// parameters themselves.
struct Step {
    state: usize,
    action: usize,
    old_logprob: f64,
    advantage: f64,
    ret: f64,
}

/// Per-trajectory steps in trajectory order.
fn prepare_steps(
    actor: &ActorPolicy,
    trajectories: &[Trajectory],
    config: &PpoConfig,
) -> Result<Vec<Vec<Step>>, PolicyError> {
    let policy = &actor.policy;
    let eos = policy.eos_id();
    let mut all = Vec::with_capacity(trajectories.len());
    for (ti, traj) in trajectories.iter().enumerate() {
        let t_len = traj.tokens.len();
        if t_len == 0
            || traj.actor_logprobs.len() != t_len
            || traj.per_token_kl.len() != t_len
            || traj.values.len() != t_len
        {
            return Err(PolicyError::MalformedSequence(format!(
                "trajectory {ti}: inconsistent per-token lengths"
            )));
        }
        if t_len > policy.max_length() {
            return Err(PolicyError::TooLong { length: t_len, max: policy.max_length() });
        }

        // Shaped rewards: −β·KL each step, terminal reward at the end.
        let mut rewards: Vec<f64> = traj.per_token_kl.iter().map(|kl| -config.beta * kl).collect();
        rewards[t_len - 1] += traj.terminal_reward;

        // GAE backwards; the post-terminal value is 0.
        let mut advantages = vec![0.0f64; t_len];
        let mut carry = 0.0;
        for t in (0..t_len).rev() {
            let next_value = if t + 1 < t_len { traj.values[t + 1] } else { 0.0 };
            let delta = rewards[t] + config.discount * next_value - traj.values[t];
            carry = delta + config.discount * config.gae_lambda * carry;
            advantages[t] = carry;
        }

        // Reconstruct the decision states.
        let mut state = policy.initial_state(&traj.prompt);
        let mut steps = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let action = traj.tokens[t];
            if action > eos || (action == eos && t + 1 != t_len) {
                return Err(PolicyError::MalformedSequence(format!(
                    "trajectory {ti}: bad action {action} at step {t}"
                )));
            }
            steps.push(Step {
                state,
                action,
                old_logprob: traj.actor_logprobs[t],
                advantage: advantages[t],
                ret: advantages[t] + traj.values[t],
            });
            if action != eos {
                state = action;
            }
        }
        all.push(steps);
    }
    Ok(all)
}

/// Whitens advantages in place across every step of the batch. A batch with
/// (numerically) constant advantages carries no ranking signal, so it maps
/// to exactly zero — otherwise rounding residue of order 1e-16 would pass
/// through the optimizer's scale normalization as a full-size step.
fn whiten(steps: &mut [Vec<Step>]) {
    let n: usize = steps.iter().map(Vec::len).sum();
    let mean: f64 = steps.iter().flatten().map(|s| s.advantage).sum::<f64>() / n as f64;
    let var: f64 =
        steps.iter().flatten().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let degenerate = std <= 1e-9 * (1.0 + mean.abs());
    for step in steps.iter_mut().flatten() {
        step.advantage =
            if degenerate { 0.0 } else { (step.advantage - mean) / (std + WHITEN_EPS) };
    }
}

/// Loss and gradients of the clipped surrogate plus value regression over
/// `steps`, as a pure function of the parameters — the seam the
/// finite-difference check probes. Returns (loss, ∂logits, ∂values,
/// clipped-step count).
fn loss_and_grad(
    logits: &Array2<f64>,
    values: &[f64],
    steps: &[&Step],
    clip_ratio: f64,
) -> (f64, Array2<f64>, Vec<f64>, usize) {
    let n_states = logits.nrows();
    let mut grad_logits: Array2<f64> = Array2::zeros((n_states, n_states));
    let mut grad_values = vec![0.0f64; values.len()];
    let n = steps.len() as f64;
    let mut loss = 0.0;
    let mut clipped_steps = 0usize;

    for step in steps {
        // Log-softmax of the current row.
        let row = logits.row(step.state);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let log_z = row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln() + max;
        let new_logprob = row[step.action] - log_z;

        let ratio = (new_logprob - step.old_logprob).exp();
        if (ratio - 1.0).abs() > clip_ratio {
            clipped_steps += 1;
        }
        let unclipped = ratio * step.advantage;
        let clipped = ratio.clamp(1.0 - clip_ratio, 1.0 + clip_ratio) * step.advantage;
        if unclipped <= clipped {
            // The min realizes the unclipped branch: gradient flows.
            loss -= unclipped / n;
            let coef = -step.advantage * ratio / n;
            let mut grad_row = grad_logits.row_mut(step.state);
            for (a, &x) in row.iter().enumerate() {
                grad_row[a] -= coef * (x - log_z).exp();
            }
            grad_row[step.action] += coef;
        } else {
            // Clipped branch: constant in the parameters.
            loss -= clipped / n;
        }

        let v = values[step.state];
        loss += VALUE_LOSS_COEF * 0.5 * (v - step.ret).powi(2) / n;
        grad_values[step.state] += VALUE_LOSS_COEF * (v - step.ret) / n;
    }
    (loss, grad_logits, grad_values, clipped_steps)
}

/// One PPO update over a batch of trajectories. On a non-finite loss the
/// actor is restored to its entry state and the stats are flagged.
pub fn ppo_update(
    actor: &mut ActorPolicy,
    trajectories: &[Trajectory],
    config: &PpoConfig,
) -> Result<PpoStats, PolicyError> {
    config.validate()?;
    if trajectories.is_empty() {
        return Err(PolicyError::EmptyTrajectories);
    }

    let n_traj = trajectories.len() as f64;
    let mean_reward = trajectories.iter().map(|t| t.terminal_reward).sum::<f64>() / n_traj;
    let mean_kl = trajectories.iter().map(Trajectory::kl_sum).sum::<f64>() / n_traj;

    let mut steps = prepare_steps(actor, trajectories, config)?;
    let aborted_stats =
        PpoStats { mean_reward, mean_kl, clip_fraction: 0.0, aborted: true };
    if steps.iter().flatten().any(|s| !s.advantage.is_finite() || !s.ret.is_finite()) {
        return Ok(aborted_stats);
    }
    whiten(&mut steps);

    let snapshot = actor.clone();
    let n_states = actor.policy.num_states();
    let mut opt_logits = AdamW::new(n_states * n_states, 0.0);
    let mut opt_values = AdamW::new(n_states, 0.0);

    let mut acc_logits: Array2<f64> = Array2::zeros((n_states, n_states));
    let mut acc_values = vec![0.0f64; n_states];
    let mut acc_count = 0usize;
    let mut clipped_total = 0usize;
    let mut steps_total = 0usize;

    let flush = |actor: &mut ActorPolicy,
                     acc_logits: &mut Array2<f64>,
                     acc_values: &mut Vec<f64>,
                     acc_count: &mut usize,
                     opt_logits: &mut AdamW,
                     opt_values: &mut AdamW,
                     lr: f64| {
        if *acc_count == 0 {
            return;
        }
        let scale = 1.0 / *acc_count as f64;
        acc_logits.mapv_inplace(|g| g * scale);
        acc_values.iter_mut().for_each(|g| *g *= scale);
        opt_logits.step(
            actor.policy.logits_mut().as_slice_mut().expect("logits are contiguous"),
            acc_logits.as_slice().expect("gradients are contiguous"),
            lr,
        );
        opt_values.step(actor.values_mut(), acc_values, lr);
        acc_logits.fill(0.0);
        acc_values.iter_mut().for_each(|g| *g = 0.0);
        *acc_count = 0;
    };

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..trajectories.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, epoch as u64));
        order.shuffle(&mut rng);

        for chunk in order.chunks(config.batch_size) {
            let minibatch: Vec<&Step> =
                chunk.iter().flat_map(|&ti| steps[ti].iter()).collect();
            let (loss, grad_logits, grad_values, clipped) = loss_and_grad(
                actor.policy.logits(),
                actor.values(),
                &minibatch,
                config.clip_ratio,
            );
            if !loss.is_finite() {
                *actor = snapshot;
                return Ok(aborted_stats);
            }
            clipped_total += clipped;
            steps_total += minibatch.len();

            acc_logits += &grad_logits;
            acc_values.iter_mut().zip(&grad_values).for_each(|(a, g)| *a += g);
            acc_count += 1;
            if acc_count == config.gradient_accumulation {
                flush(
                    actor,
                    &mut acc_logits,
                    &mut acc_values,
                    &mut acc_count,
                    &mut opt_logits,
                    &mut opt_values,
                    config.learning_rate,
                );
            }
        }
        // Don't let a partial accumulation leak into the next epoch.
        flush(
            actor,
            &mut acc_logits,
            &mut acc_values,
            &mut acc_count,
            &mut opt_logits,
            &mut opt_values,
            config.learning_rate,
        );
    }

    let clip_fraction =
        if steps_total > 0 { clipped_total as f64 / steps_total as f64 } else { 0.0 };
    Ok(PpoStats { mean_reward, mean_kl, clip_fraction, aborted: false })
}

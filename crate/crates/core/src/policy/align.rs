//! The alignment loop: repeated rollout-then-update against a frozen
//! reference policy, with an optional proportional controller that retunes
//! the KL coefficient toward a divergence setpoint.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::ppo::{ppo_update, PpoConfig};
use super::rollout::{rollout, RewardFn};
use super::{ActorPolicy, Policy, PolicyError};
use crate::hashing::mix_seed;

/// Bounds for the adaptive KL coefficient.
const BETA_MIN: f64 = 1e-4;
const BETA_MAX: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct AlignConfig {
    pub ppo: PpoConfig,
    /// Rollout/update rounds.
    pub iterations: usize,
    /// Trajectories sampled per round (prompts are cycled to this count).
    pub rollouts_per_iteration: usize,
    /// When set, the KL coefficient is retuned each round toward this
    /// per-sequence divergence; when unset the coefficient stays fixed.
    pub kl_target: Option<f64>,
    /// Proportional gain of the coefficient controller.
    pub controller_gain: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            ppo: PpoConfig::default(),
            iterations: 80,
            rollouts_per_iteration: 64,
            kl_target: None,
            controller_gain: 0.1,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        self.ppo.validate()?;
        let bad = |m: String| Err(PolicyError::BadConfig(m));
        if self.iterations == 0 {
            return bad("iterations must be ≥ 1".into());
        }
        if self.rollouts_per_iteration == 0 {
            return bad("rollouts_per_iteration must be ≥ 1".into());
        }
        if let Some(target) = self.kl_target {
            if !(target > 0.0) || !target.is_finite() {
                return bad(format!("kl_target must be positive and finite, got {target}"));
            }
        }
        if !(self.controller_gain > 0.0) || !self.controller_gain.is_finite() {
            return bad(format!(
                "controller_gain must be positive and finite, got {}",
                self.controller_gain
            ));
        }
        Ok(())
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_kl: f64,
    pub clip_fraction: f64,
    /// KL coefficient in force during this iteration.
    pub beta: f64,
}

#[derive(Debug)]
pub struct AlignOutcome {
    pub actor: ActorPolicy,
    pub curve: Vec<CurvePoint>,
    /// Rollouts dropped for failed or non-finite rewards, summed over rounds.
    pub invalid_rollouts: usize,
    /// Updates rolled back after a non-finite loss.
    pub aborted_updates: usize,
}

/// Optimizes a fresh actor (initialized from `reference`) against
/// `reward_fn`, penalized by divergence from `reference`. Deterministic for
/// a fixed config: round `i` draws rollouts with seed stream `2i` and
/// shuffles minibatches with stream `2i + 1`.
pub fn align(
    reference: &Policy,
    prompts: &[String],
    reward_fn: &RewardFn,
    config: &AlignConfig,
) -> Result<AlignOutcome, PolicyError> {
    config.validate()?;
    if prompts.is_empty() {
        return Err(PolicyError::EmptyPrompts);
    }

    let mut actor = ActorPolicy::from_reference(reference);
    let mut beta = config.ppo.beta;
    let mut curve = Vec::with_capacity(config.iterations);
    let mut invalid_rollouts = 0usize;
    let mut aborted_updates = 0usize;

    let round_prompts: Vec<String> = prompts
        .iter()
        .cycle()
        .take(config.rollouts_per_iteration)
        .cloned()
        .collect();

    for iteration in 0..config.iterations {
        let batch = rollout(
            &actor,
            reference,
            &round_prompts,
            reward_fn,
            mix_seed(config.ppo.seed, 2 * iteration as u64),
        )?;
        invalid_rollouts += batch.invalid;
        if batch.trajectories.is_empty() {
            return Err(PolicyError::NoValidTrajectories { invalid: batch.invalid });
        }

        let round_config = PpoConfig {
            beta,
            seed: mix_seed(config.ppo.seed, 2 * iteration as u64 + 1),
            ..config.ppo.clone()
        };
        let stats = ppo_update(&mut actor, &batch.trajectories, &round_config)?;
        aborted_updates += usize::from(stats.aborted);
        curve.push(CurvePoint {
            iteration,
            mean_reward: stats.mean_reward,
            mean_kl: stats.mean_kl,
            clip_fraction: stats.clip_fraction,
            beta,
        });

        if let Some(target) = config.kl_target {
            let error = (stats.mean_kl / target - 1.0).clamp(-1.0, 1.0);
            beta = (beta * (1.0 + config.controller_gain * error)).clamp(BETA_MIN, BETA_MAX);
        }
    }

    Ok(AlignOutcome { actor, curve, invalid_rollouts, aborted_updates })
}

/// Writes the curve as CSV with header
/// `iteration,mean_reward,mean_kl,clip_fraction`.
pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "iteration,mean_reward,mean_kl,clip_fraction")?;
    for p in curve {
        writeln!(out, "{},{},{},{}", p.iteration, p.mean_reward, p.mean_kl, p.clip_fraction)?;
    }
    out.flush()
}

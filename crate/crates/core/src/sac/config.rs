use serde::{Deserialize, Serialize};

use crate::env::TrackingMode;
use crate::error::{NavError, Result};
use crate::rewards::RewardSpec;

/// Every knob of a SAC run; serialized whole into the run's config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacConfig {
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub discount: f64,
    /// Soft target-update interpolation.
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub temperature_lr: f64,
    pub initial_temperature: f64,
    pub auto_temperature: bool,
    /// Defaults to −(action dimension).
    pub target_entropy: f64,
    /// Subsequences per update.
    pub batch_size: usize,
    /// Steps per subsequence.
    pub sequence_length: usize,
    /// Steps replayed before each subsequence to warm the recurrent state.
    pub burn_in: usize,
    /// Replay capacity in episodes.
    pub replay_capacity: usize,
    pub lstm_hidden: usize,
    pub hidden: Vec<usize>,
    /// Random-action episodes collected before updates start.
    pub prefill_episodes: usize,
    /// Environment steps between gradient updates.
    pub update_every: u64,
    /// Stop once an evaluation reaches this success rate, in percent.
    pub early_stop_success: Option<f64>,
    pub seed: u64,
    pub reward: RewardSpec,
    pub tracking_mode: TrackingMode,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            total_steps: 200_000,
            eval_interval: 10_000,
            eval_episodes: 100,
            discount: 0.99,
            tau: 0.005,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            temperature_lr: 3e-4,
            initial_temperature: 1.0,
            auto_temperature: true,
            target_entropy: -4.0,
            batch_size: 8,
            sequence_length: 64,
            burn_in: 16,
            replay_capacity: 2_000,
            lstm_hidden: 64,
            hidden: vec![256, 256],
            prefill_episodes: 10,
            update_every: 1,
            early_stop_success: None,
            seed: 0,
            reward: RewardSpec::dense(),
            tracking_mode: TrackingMode::Dual,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, why: &str| Err(NavError::Config(format!("{field}: {why}")));
        if self.eval_interval == 0 {
            return fail("eval_interval", "must be positive");
        }
        if self.total_steps % self.eval_interval != 0 {
            return fail("eval_interval", "must divide total_steps");
        }
        if self.eval_episodes == 0 {
            return fail("eval_episodes", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return fail("discount", "must lie in [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("tau", "must lie in (0, 1]");
        }
        for (f, v) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr), ("temperature_lr", self.temperature_lr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(f, "must be finite and non-negative");
            }
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return fail("initial_temperature", "must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size", "must be positive");
        }
        if self.sequence_length == 0 {
            return fail("sequence_length", "must be positive");
        }
        if self.replay_capacity == 0 {
            return fail("replay_capacity", "must be positive");
        }
        if self.lstm_hidden == 0 || self.hidden.contains(&0) {
            return fail("hidden", "sizes must be positive");
        }
        if self.update_every == 0 {
            return fail("update_every", "must be positive");
        }
        self.reward.validate()
    }
}

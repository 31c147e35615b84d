//! Per-step rewards: dense progress reward, learned IRL reward, and their
//! shaped combination.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation, TransitionInfo};
use crate::error::{NavError, Result};
use crate::irl::BranchModels;
use crate::vessel::TargetBranch;

pub const STEP_PENALTY: f64 = -0.005;
pub const PATHLENGTH_COEFFICIENT: f64 = 0.001;
pub const SUCCESS_BONUS: f64 = 1.0;
pub const DEFAULT_ALPHA: f64 = 0.001;

/// −0.005 − 0.001·Δpathlength (+1 when the target is reached).
pub fn dense_reward(info: &TransitionInfo) -> f64 {
    let bonus = if info.reached { SUCCESS_BONUS } else { 0.0 };
    STEP_PENALTY - PATHLENGTH_COEFFICIENT * info.delta_pathlength + bonus
}

/// Learned reward of the branch the target lies in. `obs` must be the
/// dual-tracking observation the action was taken from.
pub fn irl_reward(models: &BranchModels, branch: TargetBranch, obs: &Observation, action: &Action) -> Result<f64> {
    models.get(branch).reward(&obs.to_vec(), &action.to_array())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReward {
    pub value: f64,
    pub dense: Option<f64>,
    pub irl: Option<f64>,
}

/// dense + α·irl.
pub fn shaped_reward(
    info: &TransitionInfo,
    models: &BranchModels,
    branch: TargetBranch,
    obs: &Observation,
    action: &Action,
    alpha: f64,
) -> Result<StepReward> {
    let dense = dense_reward(info);
    let irl = irl_reward(models, branch, obs, action)?;
    Ok(StepReward { value: dense + alpha * irl, dense: Some(dense), irl: Some(irl) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Dense,
    Irl,
    Shaped,
}

impl RewardKind {
    pub fn needs_models(self) -> bool {
        !matches!(self, RewardKind::Dense)
    }
}

impl std::str::FromStr for RewardKind {
    type Err = NavError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(RewardKind::Dense),
            "irl" => Ok(RewardKind::Irl),
            "shaped" => Ok(RewardKind::Shaped),
            other => Err(NavError::Config(format!("reward: unknown kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for RewardKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RewardKind::Dense => "dense",
            RewardKind::Irl => "irl",
            RewardKind::Shaped => "shaped",
        })
    }
}

/// Which reward drives training. Models are attached at runtime and are
/// not part of the serialized form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardSpec {
    pub kind: RewardKind,
    pub alpha: f64,
    #[serde(skip)]
    pub models: Option<Arc<BranchModels>>,
}

impl PartialEq for RewardSpec {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind && self.alpha == o.alpha && self.models.is_some() == o.models.is_some()
    }
}

impl RewardSpec {
    pub fn dense() -> Self {
        Self { kind: RewardKind::Dense, alpha: DEFAULT_ALPHA, models: None }
    }

    pub fn irl(models: Arc<BranchModels>) -> Self {
        Self { kind: RewardKind::Irl, alpha: DEFAULT_ALPHA, models: Some(models) }
    }

    pub fn shaped(models: Arc<BranchModels>, alpha: f64) -> Self {
        Self { kind: RewardKind::Shaped, alpha, models: Some(models) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == RewardKind::Shaped && !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(NavError::Config(format!("alpha: must be finite and non-negative, got {}", self.alpha)));
        }
        if self.kind.needs_models() && self.models.is_none() {
            return Err(NavError::Config(format!("irl_models: required for the {} reward", self.kind)));
        }
        Ok(())
    }

    /// Reward for one transition. `obs` is the dual observation before the action.
    pub fn evaluate(&self, info: &TransitionInfo, branch: TargetBranch, obs: &Observation, action: &Action) -> Result<StepReward> {
        let models = || self.models.as_deref().ok_or_else(|| NavError::Config("irl_models: not loaded".into()));
        match self.kind {
            RewardKind::Dense => {
                let d = dense_reward(info);
                Ok(StepReward { value: d, dense: Some(d), irl: None })
            }
            RewardKind::Irl => {
                let r = irl_reward(models()?, branch, obs, action)?;
                Ok(StepReward { value: r, dense: None, irl: Some(r) })
            }
            RewardKind::Shaped => shaped_reward(info, models()?, branch, obs, action, self.alpha),
        }
    }
}

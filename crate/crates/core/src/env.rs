//! Episodic navigation environment over the device simulator.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{
    reset_devices, step_devices, tracked_tip_points, DeviceAction, DeviceKind, DeviceSpecs, SimState,
};
use crate::error::{NavError, Result};
use crate::geometry::Vec2;
use crate::vessel::{PointRef, Split, TargetBranch, TargetSet, VesselTree};

pub type Action = DeviceAction<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingMode {
    Single,
    Dual,
}

impl TrackingMode {
    /// Observation vector length.
    pub fn obs_dim(self) -> usize {
        match self {
            TrackingMode::Single => 3 * 2 * 2 + 2 + 4,
            TrackingMode::Dual => 3 * 2 * 2 * 2 + 2 + 4,
        }
    }
}

impl std::str::FromStr for TrackingMode {
    type Err = NavError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(TrackingMode::Single),
            "dual" => Ok(TrackingMode::Dual),
            other => Err(NavError::Config(format!("unknown tracking mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// mm, Euclidean guidewire tip to target.
    pub success_threshold: f64,
    pub timeout_steps: u64,
    /// Hz
    pub control_frequency: f64,
    pub tracking_mode: TrackingMode,
    pub target_split: Split,
    /// Use only the first `n` targets of each branch's split.
    pub targets_per_branch: Option<usize>,
    pub insertion: PointRef,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            success_threshold: 5.0,
            timeout_steps: 400,
            control_frequency: 7.5,
            tracking_mode: TrackingMode::Dual,
            target_split: Split::Train,
            targets_per_branch: None,
            insertion: PointRef::new(0, 0),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.success_threshold > 0.0) {
            return Err(NavError::Config("success_threshold must be positive".into()));
        }
        if self.timeout_steps == 0 {
            return Err(NavError::Config("timeout_steps must be positive".into()));
        }
        if (self.control_frequency - 7.5).abs() > 1e-12 {
            return Err(NavError::Config("control_frequency is fixed at 7.5 Hz".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.control_frequency
    }

    /// Seconds until timeout.
    pub fn horizon_seconds(&self) -> f64 {
        self.timeout_steps as f64 * self.dt()
    }
}

/// Projected tip triplets of the tracked devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipTracks {
    pub guidewire: [Vec2<f64>; 3],
    pub catheter: Option<[Vec2<f64>; 3]>,
}

/// Factor applied to millimetre coordinates before they enter a network.
pub const POSITION_SCALE: f64 = 0.01;

/// Network features of a flat observation: coordinates scaled by
/// [`POSITION_SCALE`], the trailing previous action unchanged.
pub fn network_features(obs: &[f64]) -> Vec<f64> {
    let split = obs.len().saturating_sub(DeviceAction::<f64>::DIM);
    obs.iter().enumerate().map(|(i, v)| if i < split { v * POSITION_SCALE } else { *v }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub current_tips: TipTracks,
    pub previous_tips: TipTracks,
    pub target: Vec2<f64>,
    pub previous_action: Action,
}

impl Observation {
    /// Flat layout: current gw, current catheter, previous gw, previous catheter, target, previous action.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(30);
        for tips in [&self.current_tips, &self.previous_tips] {
            for p in tips.guidewire {
                v.extend([p.x, p.z]);
            }
            if let Some(c) = tips.catheter {
                for p in c {
                    v.extend([p.x, p.z]);
                }
            }
        }
        v.extend([self.target.x, self.target.z]);
        v.extend(self.previous_action.to_array());
        v
    }

    pub fn mode(&self) -> TrackingMode {
        if self.current_tips.catheter.is_some() {
            TrackingMode::Dual
        } else {
            TrackingMode::Single
        }
    }

    /// Drops catheter tracking.
    pub fn to_single(&self) -> Observation {
        let strip = |t: &TipTracks| TipTracks { guidewire: t.guidewire, catheter: None };
        Observation {
            current_tips: strip(&self.current_tips),
            previous_tips: strip(&self.previous_tips),
            target: self.target,
            previous_action: self.previous_action,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionInfo {
    pub delta_pathlength: f64,
    pub reached: bool,
    pub distance_to_target: f64,
    pub pathlength_to_target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    Success,
    Timeout,
}

impl EpisodeStatus {
    pub fn is_terminal(self) -> bool {
        self != EpisodeStatus::Running
    }
}

/// Outcome of one finished (or running) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub target: PointRef,
    pub branch: TargetBranch,
    pub status: EpisodeStatus,
    pub ticks: u64,
    pub initial_pathlength: f64,
    pub final_pathlength: f64,
    pub dt: f64,
}

/// Seconds from start to success.
pub fn procedure_time(episode: &EpisodeSummary) -> Result<f64> {
    if episode.status != EpisodeStatus::Success {
        return Err(NavError::Domain(format!("procedure time undefined for {:?} episode", episode.status)));
    }
    Ok(episode.ticks as f64 * episode.dt)
}

/// One line of an episode JSONL record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub info: TickInfo,
    pub status: EpisodeStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickInfo {
    pub dpl: f64,
    pub dist: f64,
    pub reached: bool,
}

/// Single-caller navigation environment.
#[derive(Debug, Clone)]
pub struct NavEnv {
    tree: Arc<VesselTree<f64>>,
    specs: DeviceSpecs<f64>,
    config: EnvConfig,
    targets: Vec<TargetSet>,
    state: SimState<f64>,
    target: PointRef,
    branch: TargetBranch,
    status: EpisodeStatus,
    prev_tips: TipTracks,
    prev_action: Action,
    pathlength: f64,
    initial_pathlength: f64,
    seed: u64,
}

impl NavEnv {
    pub fn new(tree: Arc<VesselTree<f64>>, config: EnvConfig, targets: Vec<TargetSet>) -> Result<Self> {
        Self::with_specs(tree, config, targets, DeviceSpecs::default())
    }

    pub fn with_specs(
        tree: Arc<VesselTree<f64>>,
        config: EnvConfig,
        targets: Vec<TargetSet>,
        specs: DeviceSpecs<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if targets.is_empty() {
            return Err(NavError::Config("no target sets".into()));
        }
        let state = reset_devices(&tree, &specs, config.insertion)?;
        let first = &targets[0];
        let target = *first
            .split(config.target_split)
            .first()
            .ok_or_else(|| NavError::Config("empty target split".into()))?;
        let mut env = Self {
            branch: first.branch,
            tree,
            specs,
            config,
            targets,
            state,
            target,
            status: EpisodeStatus::Running,
            prev_tips: TipTracks { guidewire: [Vec2::default(); 3], catheter: None },
            prev_action: Action::zero(),
            pathlength: 0.0,
            initial_pathlength: 0.0,
            seed: 0,
        };
        env.reset(target, 0)?;
        Ok(env)
    }

    pub fn tree(&self) -> &Arc<VesselTree<f64>> {
        &self.tree
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn specs(&self) -> &DeviceSpecs<f64> {
        &self.specs
    }

    pub fn state(&self) -> &SimState<f64> {
        &self.state
    }

    pub fn target(&self) -> PointRef {
        self.target
    }

    pub fn branch(&self) -> TargetBranch {
        self.branch
    }

    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tick(&self) -> u64 {
        self.state.tick
    }

    pub fn target_sets(&self) -> &[TargetSet] {
        &self.targets
    }

    /// Targets of the configured split across all branches, in branch order.
    pub fn target_pool(&self) -> Vec<(TargetBranch, PointRef)> {
        let mut out = Vec::new();
        for set in &self.targets {
            let split = set.split(self.config.target_split);
            let n = self.config.targets_per_branch.unwrap_or(split.len()).min(split.len());
            out.extend(split[..n].iter().map(|r| (set.branch, *r)));
        }
        out
    }

    /// Starts an episode at `target`, which must belong to the configured split.
    pub fn reset(&mut self, target: PointRef, seed: u64) -> Result<Observation> {
        let branch = self
            .target_pool()
            .into_iter()
            .find(|(_, r)| *r == target)
            .map(|(b, _)| b)
            .ok_or_else(|| {
                let other = self.targets.iter().find_map(|s| s.split_of(target));
                NavError::Protocol(match other {
                    Some(split) => format!(
                        "target {target:?} is a {split:?} target, env is configured for {:?}",
                        self.config.target_split
                    ),
                    None => format!("target {target:?} is not in the target pool"),
                })
            })?;
        self.state = reset_devices(&self.tree, &self.specs, self.config.insertion)?;
        self.target = target;
        self.branch = branch;
        self.seed = seed;
        self.status = EpisodeStatus::Running;
        self.prev_tips = self.current_tips();
        self.prev_action = Action::zero();
        self.pathlength = self.tree.pathlength(self.state.guidewire.tip(), target);
        self.initial_pathlength = self.pathlength;
        Ok(self.observation())
    }

    /// Starts an episode at a target drawn uniformly from the configured split.
    pub fn reset_random(&mut self, seed: u64) -> Result<Observation> {
        let pool = self.target_pool();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, target) = pool[rng.random_range(0..pool.len())];
        self.reset(target, seed)
    }

    fn current_tips(&self) -> TipTracks {
        TipTracks {
            guidewire: tracked_tip_points(&self.tree, &self.state, DeviceKind::Guidewire),
            catheter: Some(tracked_tip_points(&self.tree, &self.state, DeviceKind::Catheter)),
        }
    }

    /// Observation with both devices tracked, regardless of mode.
    pub fn dual_observation(&self) -> Observation {
        Observation {
            current_tips: self.current_tips(),
            previous_tips: self.prev_tips,
            target: self.tree.project_to_plane(self.target_point()),
            previous_action: self.prev_action,
        }
    }

    /// Observation for the configured tracking mode.
    pub fn observation(&self) -> Observation {
        let dual = self.dual_observation();
        match self.config.tracking_mode {
            TrackingMode::Dual => dual,
            TrackingMode::Single => dual.to_single(),
        }
    }

    pub fn target_point(&self) -> crate::geometry::Vec3<f64> {
        self.tree.point(self.target).expect("target validated at reset")
    }

    pub fn pathlength_to_target(&self) -> f64 {
        self.pathlength
    }

    pub fn step(&mut self, action: Action) -> Result<(Observation, TransitionInfo, EpisodeStatus)> {
        if self.status != EpisodeStatus::Running {
            return Err(NavError::Protocol(format!("episode already ended ({:?})", self.status)));
        }
        let action = action.clamped();
        self.prev_tips = self.current_tips();
        self.state = step_devices(&self.tree, &self.specs, &self.state, &action);
        self.prev_action = action;
        let tip = self.state.guidewire.tip();
        let pl = self.tree.pathlength(tip, self.target);
        let distance = tip.distance(self.target_point());
        let reached = distance <= self.config.success_threshold;
        let info = TransitionInfo {
            delta_pathlength: pl - self.pathlength,
            reached,
            distance_to_target: distance,
            pathlength_to_target: pl,
        };
        self.pathlength = pl;
        self.status = if reached {
            EpisodeStatus::Success
        } else if self.state.tick >= self.config.timeout_steps {
            EpisodeStatus::Timeout
        } else {
            EpisodeStatus::Running
        };
        Ok((self.observation(), info, self.status))
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            target: self.target,
            branch: self.branch,
            status: self.status,
            ticks: self.state.tick,
            initial_pathlength: self.initial_pathlength,
            final_pathlength: self.pathlength,
            dt: self.config.dt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vessel::{build_synthetic_tree, sample_targets, TreeConfig};

    pub(crate) fn reduced_env(mode: TrackingMode, split: Split) -> NavEnv {
        let tree = Arc::new(build_synthetic_tree(&TreeConfig::reduced(7)).unwrap());
        let targets = TargetBranch::BOTH.iter().map(|b| sample_targets(&tree, *b, 1).unwrap()).collect();
        NavEnv::new(tree, EnvConfig { tracking_mode: mode, target_split: split, ..EnvConfig::default() }, targets)
            .unwrap()
    }

    #[test]
    fn observation_shapes() {
        let mut env = reduced_env(TrackingMode::Dual, Split::Train);
        let o = env.reset_random(3).unwrap();
        assert_eq!(o.to_vec().len(), 30);
        assert_eq!(o.previous_tips, o.current_tips);
        assert_eq!(o.previous_action, Action::zero());
        let mut env = reduced_env(TrackingMode::Single, Split::Train);
        let o = env.reset_random(3).unwrap();
        assert_eq!(o.to_vec().len(), 18);
        assert!(o.current_tips.catheter.is_none() && o.previous_tips.catheter.is_none());
    }

    #[test]
    fn wrong_split_target_is_protocol_error() {
        let mut env = reduced_env(TrackingMode::Dual, Split::Train);
        let test_target = env.target_sets()[0].test[0];
        assert!(matches!(env.reset(test_target, 0), Err(NavError::Protocol(_))));
    }

    #[test]
    fn zero_action_keeps_pathlength() {
        let mut env = reduced_env(TrackingMode::Dual, Split::Train);
        env.reset_random(1).unwrap();
        let (_, info, status) = env.step(Action::zero()).unwrap();
        assert!(info.delta_pathlength.abs() < 1e-9);
        assert_eq!(status, EpisodeStatus::Running);
    }

    #[test]
    fn zero_actions_time_out_at_400() {
        let mut env = reduced_env(TrackingMode::Dual, Split::Train);
        env.reset_random(1).unwrap();
        for t in 1..=400u64 {
            let (_, _, status) = env.step(Action::zero()).unwrap();
            assert_eq!(status == EpisodeStatus::Timeout, t == 400);
        }
        assert!(matches!(env.step(Action::zero()), Err(NavError::Protocol(_))));
        assert!((env.config().horizon_seconds() - 53.333_333_333).abs() < 1e-6);
    }

    #[test]
    fn catheter_actions_change_state_in_single_mode() {
        let mut env = reduced_env(TrackingMode::Single, Split::Train);
        env.reset_random(1).unwrap();
        env.step(Action::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        let before = env.state().catheter.clone();
        let (obs, _, _) = env.step(Action::new(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert_ne!(env.state().catheter, before);
        assert!(obs.current_tips.catheter.is_none());
    }

    #[test]
    fn procedure_time_arithmetic() {
        let mut s = EpisodeSummary {
            target: PointRef::new(0, 0),
            branch: TargetBranch::RICA,
            status: EpisodeStatus::Success,
            ticks: 150,
            initial_pathlength: 1.0,
            final_pathlength: 0.0,
            dt: 1.0 / 7.5,
        };
        assert!((procedure_time(&s).unwrap() - 20.0).abs() < 1e-12);
        s.ticks = 1;
        assert!((procedure_time(&s).unwrap() - 0.133_333_333_333).abs() < 1e-9);
        s.status = EpisodeStatus::Timeout;
        assert!(matches!(procedure_time(&s), Err(NavError::Domain(_))));
    }
}

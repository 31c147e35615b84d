//! Teleoperation sessions: one environment per session plus its recording.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use navrl_core::device::DeviceKind;
use navrl_core::env::{Action, EnvConfig, EpisodeStatus, NavEnv, TrackingMode};
use navrl_core::irl::{append_demonstration, DemoStep, Demonstration};
use navrl_core::{NavError, PointRef, Result, Split, TargetBranch, TargetSet, Tree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::wire::{Frame, FrameStatus, SessionId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Live,
    Completed,
    Aborted,
}

/// Tree, targets and environment settings shared by all sessions.
#[derive(Debug, Clone)]
pub struct SessionContext {
    pub tree: Arc<Tree>,
    pub targets: Vec<TargetSet>,
    pub env_config: EnvConfig,
}

impl SessionContext {
    /// Recording always runs on training targets with both devices tracked.
    pub fn new(tree: Arc<Tree>, targets: Vec<TargetSet>) -> Self {
        let env_config =
            EnvConfig { target_split: Split::Train, tracking_mode: TrackingMode::Dual, ..EnvConfig::default() };
        Self { tree, targets, env_config }
    }

    pub fn env(&self) -> Result<NavEnv> {
        NavEnv::new(self.tree.clone(), self.env_config.clone(), self.targets.clone())
    }

    /// Training target of `branch` picked by `seed`.
    pub fn pick_target(&self, branch: TargetBranch, seed: u64) -> Result<PointRef> {
        let set = self
            .targets
            .iter()
            .find(|s| s.branch == branch)
            .ok_or_else(|| NavError::Config(format!("targets: no {branch} target set")))?;
        let pool = set.split(Split::Train);
        if pool.is_empty() {
            return Err(NavError::Config(format!("targets: {branch} has no training targets")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(pool[rng.random_range(0..pool.len())])
    }
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub id: SessionId,
    pub env: NavEnv,
    pub seed: u64,
    pub steps: Vec<DemoStep>,
    pub phase: Phase,
    pub saved: bool,
}

impl SessionState {
    pub fn frame(&self) -> Frame {
        let tree = self.env.tree();
        let project = |kind| {
            self.env
                .state()
                .device(kind)
                .body
                .iter()
                .map(|p| {
                    let q = tree.project_to_plane(*p);
                    [q.x, q.z]
                })
                .collect()
        };
        let target = tree.project_to_plane(self.env.target_point());
        Frame {
            session: self.id,
            tick: self.env.tick(),
            gw: project(DeviceKind::Guidewire),
            cath: project(DeviceKind::Catheter),
            target: [target.x, target.z],
            status: match self.env.status() {
                EpisodeStatus::Running => FrameStatus::Running,
                EpisodeStatus::Success => FrameStatus::Success,
                EpisodeStatus::Timeout => FrameStatus::Timeout,
            },
        }
    }

    pub fn demonstration(&self) -> Demonstration {
        Demonstration {
            branch: self.env.branch(),
            target: self.env.target(),
            steps: self.steps.clone(),
            outcome: self.env.status() == EpisodeStatus::Success,
            seed: Some(self.seed),
        }
    }
}

/// All sessions of one server.
#[derive(Debug)]
pub struct SessionManager {
    ctx: SessionContext,
    sessions: HashMap<SessionId, SessionState>,
    next_id: SessionId,
}

impl SessionManager {
    pub fn new(ctx: SessionContext) -> Self {
        Self { ctx, sessions: HashMap::new(), next_id: 1 }
    }

    pub fn context(&self) -> &SessionContext {
        &self.ctx
    }

    fn get(&self, id: SessionId) -> Result<&SessionState> {
        self.sessions.get(&id).ok_or_else(|| NavError::Protocol(format!("unknown session {id}")))
    }

    fn get_mut(&mut self, id: SessionId) -> Result<&mut SessionState> {
        self.sessions.get_mut(&id).ok_or_else(|| NavError::Protocol(format!("unknown session {id}")))
    }

    pub fn session(&self, id: SessionId) -> Result<&SessionState> {
        self.get(id)
    }

    pub fn phase(&self, id: SessionId) -> Result<Phase> {
        Ok(self.get(id)?.phase)
    }

    /// Opens a live session on a training target of `branch` and returns its tick-0 frame.
    pub fn start(&mut self, branch: TargetBranch, seed: u64) -> Result<Frame> {
        let target = self.ctx.pick_target(branch, seed)?;
        let mut env = self.ctx.env()?;
        env.reset(target, seed)?;
        let id = self.next_id;
        self.next_id += 1;
        let session = SessionState { id, env, seed, steps: Vec::new(), phase: Phase::Live, saved: false };
        let frame = session.frame();
        self.sessions.insert(id, session);
        Ok(frame)
    }

    /// Applies one tick's action, records it and returns the resulting frame.
    pub fn session_step(&mut self, id: SessionId, action: Action) -> Result<Frame> {
        let s = self.get_mut(id)?;
        if s.phase != Phase::Live {
            return Err(NavError::Protocol(format!("session {id} is {:?}, not live", s.phase)));
        }
        let action = action.clamped();
        let obs = s.env.dual_observation().to_vec();
        let (_, _, status) = s.env.step(action)?;
        s.steps.push(DemoStep { obs, action: action.to_array().to_vec() });
        if status.is_terminal() {
            s.phase = Phase::Completed;
        }
        Ok(s.frame())
    }

    pub fn abort(&mut self, id: SessionId) -> Result<()> {
        let s = self.get_mut(id)?;
        if s.phase == Phase::Completed {
            return Err(NavError::Protocol(format!("session {id} already completed")));
        }
        s.phase = Phase::Aborted;
        Ok(())
    }

    /// Appends the completed session to its branch file under `corpus` and
    /// returns the number of records that file now holds.
    pub fn save_demonstration(&mut self, id: SessionId, corpus: &Path) -> Result<(usize, PathBuf)> {
        let s = self.get(id)?;
        match s.phase {
            Phase::Aborted => return Err(NavError::Domain(format!("session {id} was aborted"))),
            Phase::Live => return Err(NavError::Protocol(format!("session {id} is still live"))),
            Phase::Completed if s.saved => {
                return Err(NavError::Protocol(format!("session {id} already saved")));
            }
            Phase::Completed => {}
        }
        let path = append_demonstration(corpus, &s.demonstration())?;
        let records = fs::read_to_string(&path)?.lines().filter(|l| !l.trim().is_empty()).count();
        self.get_mut(id)?.saved = true;
        Ok((records, path))
    }
}

/// Replays a demonstration's actions through a fresh environment and
/// returns the observation recorded before each step.
pub fn replay_observations(ctx: &SessionContext, demo: &Demonstration) -> Result<Vec<Vec<f64>>> {
    let seed = demo.seed.ok_or_else(|| NavError::Validation("demonstration has no seed".into()))?;
    let mut env = ctx.env()?;
    env.reset(demo.target, seed)?;
    let mut out = Vec::with_capacity(demo.steps.len());
    for step in &demo.steps {
        out.push(env.dual_observation().to_vec());
        env.step(Action::from_slice(&step.action)?)?;
    }
    Ok(out)
}

use serde::{Deserialize, Serialize};

use super::agent::Controller;
use crate::env::{procedure_time, EpisodeStatus, NavEnv};
use crate::error::{NavError, Result};
use crate::vessel::{PointRef, Split, TargetBranch};

/// Outcome of one evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEval {
    pub target: PointRef,
    pub branch: TargetBranch,
    pub success: bool,
    pub ticks: u64,
    pub procedure_time_s: Option<f64>,
    pub initial_pathlength: f64,
    pub final_pathlength: f64,
    /// Fraction of the initial pathlength covered; 1 for successes.
    pub covered_fraction: f64,
}

/// Metrics of one evaluation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub exploration_steps: u64,
    /// Percent of successful episodes.
    pub success_rate: f64,
    /// Mean seconds over successful episodes; absent if none succeeded.
    pub procedure_time: Option<f64>,
    /// Mean covered fraction in percent.
    pub path_ratio: f64,
    pub episodes: Vec<EpisodeEval>,
}

/// Covered fraction of one episode, clamped to [0, 1].
pub fn covered_fraction(success: bool, initial: f64, remaining: f64) -> f64 {
    if success || initial <= 0.0 {
        1.0
    } else {
        (1.0 - remaining / initial).clamp(0.0, 1.0)
    }
}

/// Mean covered fraction × 100.
pub fn path_ratio(episodes: &[EpisodeEval]) -> f64 {
    if episodes.is_empty() {
        return 0.0;
    }
    100.0 * episodes.iter().map(|e| e.covered_fraction).sum::<f64>() / episodes.len() as f64
}

impl EvalReport {
    pub fn from_episodes(exploration_steps: u64, episodes: Vec<EpisodeEval>) -> Self {
        let n = episodes.len().max(1) as f64;
        let times: Vec<f64> = episodes.iter().filter_map(|e| e.procedure_time_s).collect();
        Self {
            exploration_steps,
            success_rate: 100.0 * episodes.iter().filter(|e| e.success).count() as f64 / n,
            procedure_time: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
            path_ratio: path_ratio(&episodes),
            episodes,
        }
    }

    /// CSV row `steps,success_rate,procedure_time_s,path_ratio`.
    pub fn csv_row(&self) -> String {
        let time = self.procedure_time.map(|t| format!("{t}")).unwrap_or_default();
        format!("{},{},{},{}", self.exploration_steps, self.success_rate, time, self.path_ratio)
    }
}

pub const EVAL_CSV_HEADER: &str = "steps,success_rate,procedure_time_s,path_ratio";

/// Runs `episodes` episodes on the environment's test targets, cycling
/// through them in pool order.
pub fn evaluate(
    controller: &mut dyn Controller,
    env: &mut NavEnv,
    episodes: usize,
    exploration_steps: u64,
    seed: u64,
) -> Result<EvalReport> {
    if env.config().target_split != Split::Test {
        return Err(NavError::Config("target_split: evaluation runs on the test split".into()));
    }
    let pool = env.target_pool();
    if pool.is_empty() {
        return Err(NavError::Config("targets: no test targets".into()));
    }
    let mut out = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let (branch, target) = pool[i % pool.len()];
        let set = env.target_sets().iter().find(|s| s.branch == branch).expect("pool branch has a set");
        assert_eq!(set.split_of(target), Some(Split::Test), "evaluation sampled a training target");
        let mut obs = env.reset(target, seed.wrapping_add(i as u64))?;
        controller.reset();
        loop {
            let action = controller.act(&obs)?;
            let (next, _, status) = env.step(action)?;
            obs = next;
            if status.is_terminal() {
                break;
            }
        }
        let s = env.summary();
        let success = s.status == EpisodeStatus::Success;
        out.push(EpisodeEval {
            target,
            branch,
            success,
            ticks: s.ticks,
            procedure_time_s: if success { Some(procedure_time(&s)?) } else { None },
            initial_pathlength: s.initial_pathlength,
            final_pathlength: s.final_pathlength,
            covered_fraction: covered_fraction(success, s.initial_pathlength, s.final_pathlength),
        });
    }
    Ok(EvalReport::from_episodes(exploration_steps, out))
}

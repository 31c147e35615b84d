use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{act_step, AgentController, AgentNetworks, LearnerSettings, SacLearner, TrainingBatch, UpdateStats};
use super::config::SacConfig;
use super::eval::{evaluate, EvalReport};
use super::replay::{EpisodeRecord, ReplayBuffer};
use crate::env::{network_features, Action, EpisodeStatus, NavEnv};
use crate::error::{NavError, Result};
use crate::vessel::Split;

/// Builds environments for a target split.
pub type EnvFactory<'a> = dyn Fn(Split) -> Result<NavEnv> + 'a;

/// Learner statistics averaged over one evaluation interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalLog {
    pub exploration_steps: u64,
    pub episodes: u64,
    pub updates: u64,
    pub mean_return: Option<f64>,
    pub train_success_rate: Option<f64>,
    pub mean_update: Option<UpdateStats>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Networks at the end of training.
    pub networks: AgentNetworks,
    /// Networks at the evaluation with the highest success rate (ties: higher path ratio, then earlier).
    pub best: AgentNetworks,
    pub best_index: usize,
    pub reports: Vec<EvalReport>,
    pub log: Vec<IntervalLog>,
}

fn seed_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn better(a: &EvalReport, b: &EvalReport) -> bool {
    a.success_rate > b.success_rate || (a.success_rate == b.success_rate && a.path_ratio > b.path_ratio)
}

#[derive(Default)]
struct Interval {
    returns: Vec<f64>,
    successes: u64,
    episodes: u64,
    stats: Vec<UpdateStats>,
}

impl Interval {
    fn log(&self, steps: u64, episodes: u64, updates: u64) -> IntervalLog {
        let mean = |f: fn(&UpdateStats) -> f64| self.stats.iter().map(f).sum::<f64>() / self.stats.len() as f64;
        IntervalLog {
            exploration_steps: steps,
            episodes,
            updates,
            mean_return: (!self.returns.is_empty()).then(|| self.returns.iter().sum::<f64>() / self.returns.len() as f64),
            train_success_rate: (self.episodes > 0).then(|| 100.0 * self.successes as f64 / self.episodes as f64),
            mean_update: (!self.stats.is_empty()).then(|| UpdateStats {
                critic_loss: mean(|s| s.critic_loss),
                policy_loss: mean(|s| s.policy_loss),
                alpha: mean(|s| s.alpha),
                mean_q: mean(|s| s.mean_q),
                entropy: mean(|s| s.entropy),
            }),
        }
    }
}

/// Soft actor-critic training with periodic deterministic evaluation.
///
/// `progress` is called after every evaluation.
pub fn train(
    config: &SacConfig,
    factory: &EnvFactory<'_>,
    mut progress: impl FnMut(&EvalReport, &IntervalLog),
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut env = factory(Split::Train)?;
    let mut eval_env = factory(Split::Test)?;
    for e in [&env, &eval_env] {
        if e.config().tracking_mode != config.tracking_mode {
            return Err(NavError::Config("tracking_mode: environment and training config disagree".into()));
        }
    }
    let nets = AgentNetworks::new(
        config.tracking_mode.obs_dim(),
        config.lstm_hidden,
        &config.hidden,
        config.initial_temperature,
        config.seed,
    )?;
    let mut learner = SacLearner::new(
        nets,
        LearnerSettings {
            discount: config.discount,
            tau: config.tau,
            actor_lr: config.actor_lr,
            critic_lr: config.critic_lr,
            temperature_lr: config.temperature_lr,
            auto_temperature: config.auto_temperature,
            target_entropy: config.target_entropy,
        },
    );
    let eval_seed = config.seed.wrapping_add(0x00E0_A100);
    let run_eval = |nets: &AgentNetworks, env: &mut NavEnv, steps: u64| -> Result<EvalReport> {
        let mut c = AgentController::<ChaCha8Rng>::deterministic(nets);
        evaluate(&mut c, env, config.eval_episodes, steps, eval_seed)
    };
    let baseline = run_eval(&learner.nets, &mut eval_env, 0)?;
    let mut log = vec![Interval::default().log(0, 0, 0)];
    progress(&baseline, &log[0]);
    let mut reports = vec![baseline];
    let mut best = learner.nets.clone();
    let mut best_index = 0;

    let mut explore_rng = seed_stream(config.seed, 1);
    let mut replay_rng = seed_stream(config.seed, 2);
    let mut noise_rng = seed_stream(config.seed, 3);
    let mut replay = ReplayBuffer::new(config.replay_capacity);
    let mut steps = 0u64;
    let mut episodes = 0u64;
    let mut interval = Interval::default();
    let mut stop = config.total_steps == 0;

    while !stop {
        let mut obs = env.reset_random(config.seed.wrapping_add(episodes))?;
        let mut record = EpisodeRecord::new(network_features(&obs.to_vec()));
        let prefill = (episodes as usize) < config.prefill_episodes;
        let mut state = learner.nets.initial_state();
        let mut ret = 0.0;
        let status = loop {
            let before = env.dual_observation();
            let action = if prefill {
                let mut u = || explore_rng.random_range(-1.0..=1.0);
                Action::new(u(), u(), u(), u())
            } else {
                let (a, s) = act_step(&learner.nets, &state, &obs, Some(&mut explore_rng))?;
                state = s;
                a
            };
            let (next, info, status) = env.step(action)?;
            let reward = config.reward.evaluate(&info, env.branch(), &before, &action)?.value;
            record.push(action.to_array(), reward, network_features(&next.to_vec()));
            ret += reward;
            obs = next;
            steps += 1;
            if !prefill && steps % config.update_every == 0 && !replay.is_empty() {
                let windows = replay.sample(&mut replay_rng, config.batch_size, config.sequence_length)?;
                let batch = TrainingBatch::from_replay(&replay, &windows, config.sequence_length, config.burn_in)?;
                let stats = learner
                    .update(&batch, &mut noise_rng)
                    .map_err(|e| NavError::Training { iteration: steps, message: e.to_string() })?;
                interval.stats.push(stats);
            }
            if steps % config.eval_interval == 0 {
                let report = run_eval(&learner.nets, &mut eval_env, steps)?;
                let entry = std::mem::take(&mut interval).log(steps, episodes, learner.updates());
                progress(&report, &entry);
                log.push(entry);
                if better(&report, &reports[best_index]) {
                    best = learner.nets.clone();
                    best_index = reports.len();
                }
                stop = config.early_stop_success.is_some_and(|t| report.success_rate >= t);
                reports.push(report);
            }
            if status.is_terminal() || steps >= config.total_steps || stop {
                break status;
            }
        };
        record.terminal = status == EpisodeStatus::Success;
        if status.is_terminal() {
            interval.returns.push(ret);
            interval.episodes += 1;
            if status == EpisodeStatus::Success {
                interval.successes += 1;
            }
        }
        replay.push(record);
        episodes += 1;
        if steps >= config.total_steps {
            stop = true;
        }
    }
    Ok(TrainOutcome { networks: learner.nets, best, best_index, reports, log })
}

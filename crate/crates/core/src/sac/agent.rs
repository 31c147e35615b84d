use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use super::replay::{ReplayBuffer, Subsequence};
use crate::diff::{
    load_network, sample_squashed, sample_tape, save_network, squash, squashed_log_prob_pre, Activation, Direction,
    Gradients, LstmState, Matrix, Network, NetworkSpec, Optimizer, ParamId, ParamStore, Tape, TapeLstmState,
};
use crate::env::{network_features, Action, Observation};
use crate::error::{NavError, Result};

const ACTION_DIM: usize = 4;

/// Shared LSTM embedder, Gaussian policy, twin critics and their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentNetworks {
    pub embedder: Network<f64>,
    pub target_embedder: Network<f64>,
    pub policy: Network<f64>,
    pub q1: Network<f64>,
    pub q2: Network<f64>,
    pub q1_target: Network<f64>,
    pub q2_target: Network<f64>,
    pub log_alpha: ParamStore<f64>,
}

const NET_DIRS: [&str; 7] = ["embedder", "target_embedder", "policy", "q1", "q2", "q1_target", "q2_target"];

impl AgentNetworks {
    pub fn new(obs_dim: usize, lstm_hidden: usize, hidden: &[usize], initial_temperature: f64, seed: u64) -> Result<Self> {
        let embed_spec = NetworkSpec { input_dim: obs_dim, recurrent: Some(lstm_hidden), layers: vec![], gaussian_head: None };
        let embedder = Network::new(embed_spec, seed)?;
        let policy = Network::new(
            NetworkSpec::mlp(lstm_hidden, hidden, 2 * ACTION_DIM, Activation::Relu).with_gaussian_head(),
            seed.wrapping_add(1),
        )?;
        let q_spec = NetworkSpec::mlp(lstm_hidden + ACTION_DIM, hidden, 1, Activation::Relu);
        let q1 = Network::new(q_spec.clone(), seed.wrapping_add(2))?;
        let q2 = Network::new(q_spec, seed.wrapping_add(3))?;
        let mut log_alpha = ParamStore::new(seed);
        log_alpha.add_constant("log_alpha", 1, 1, initial_temperature.ln());
        Ok(Self {
            target_embedder: embedder.clone(),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            embedder,
            policy,
            q1,
            q2,
            log_alpha,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.embedder.spec().input_dim
    }

    pub fn hidden(&self) -> usize {
        self.embedder.recurrent_hidden().expect("recurrent embedder")
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.get(ParamId(0)).data()[0].exp()
    }

    pub fn initial_state(&self) -> LstmState<f64> {
        LstmState::zeros(1, self.hidden())
    }

    /// Advances the embedder by one observation (already in network features).
    pub fn embed_step(&self, features: &[f64], state: &LstmState<f64>) -> Result<LstmState<f64>> {
        self.embedder.eval_lstm_step(&Matrix::row_vector(features.to_vec()), state)
    }

    /// Policy mean and standard deviation for one embedding row.
    pub fn policy_head(&self, embedding: &Matrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mu, log_std) = self.policy.eval_gaussian(embedding)?;
        Ok((mu.into_vec(), log_std.into_vec().into_iter().map(f64::exp).collect()))
    }

    /// Soft update of every target network toward its online counterpart.
    pub fn soft_update_targets(&mut self, tau: f64) -> Result<()> {
        self.target_embedder.soft_update(&self.embedder, tau)?;
        self.q1_target.soft_update(&self.q1, tau)?;
        self.q2_target.soft_update(&self.q2, tau)
    }

    fn nets(&self) -> [&Network<f64>; 7] {
        [&self.embedder, &self.target_embedder, &self.policy, &self.q1, &self.q2, &self.q1_target, &self.q2_target]
    }

    pub fn all_finite(&self) -> bool {
        self.nets().iter().all(|n| n.store().all_finite()) && self.log_alpha.all_finite()
    }

    pub fn save(&self, dir: &Path, step: u64) -> Result<()> {
        for (name, net) in NET_DIRS.iter().zip(self.nets()) {
            save_network(net, &dir.join(name), step, serde_json::json!({ "role": name }))?;
        }
        fs::write(dir.join("log_alpha.json"), serde_json::to_string(&self.log_alpha.get(ParamId(0)).data()[0])?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut nets = Vec::with_capacity(7);
        for name in NET_DIRS {
            nets.push(load_network::<f64>(&dir.join(name))?.0);
        }
        let path = dir.join("log_alpha.json");
        let text = fs::read_to_string(&path)
            .map_err(|e| NavError::Config(format!("checkpoint: cannot read {}: {e}", path.display())))?;
        let la: f64 = serde_json::from_str(&text)?;
        let mut log_alpha = ParamStore::new(nets[0].seed());
        log_alpha.add_constant("log_alpha", 1, 1, la);
        let mut it = nets.into_iter();
        let mut next = || it.next().expect("seven networks");
        Ok(Self {
            embedder: next(),
            target_embedder: next(),
            policy: next(),
            q1: next(),
            q2: next(),
            q1_target: next(),
            q2_target: next(),
            log_alpha,
        })
    }
}

/// Anything that maps observations to actions over an episode.
pub trait Controller {
    fn reset(&mut self);
    fn act(&mut self, obs: &Observation) -> Result<Action>;
}

/// Policy driven by [`AgentNetworks`]; deterministic mode emits squash(μ).
#[derive(Debug, Clone)]
pub struct AgentController<'a, R> {
    nets: &'a AgentNetworks,
    state: LstmState<f64>,
    rng: Option<R>,
}

impl<'a, R: Rng> AgentController<'a, R> {
    pub fn deterministic(nets: &'a AgentNetworks) -> Self {
        Self { nets, state: nets.initial_state(), rng: None }
    }

    pub fn stochastic(nets: &'a AgentNetworks, rng: R) -> Self {
        Self { nets, state: nets.initial_state(), rng: Some(rng) }
    }

    pub fn into_rng(self) -> Option<R> {
        self.rng
    }
}

impl<R: Rng> Controller for AgentController<'_, R> {
    fn reset(&mut self) {
        self.state = self.nets.initial_state();
    }

    fn act(&mut self, obs: &Observation) -> Result<Action> {
        let (a, s) = act_step(self.nets, &self.state, obs, self.rng.as_mut())?;
        self.state = s;
        Ok(a)
    }
}

/// One acting step: advances the embedder and emits squash(μ), or a sample
/// when a generator is supplied.
pub fn act_step<R: Rng + ?Sized>(
    nets: &AgentNetworks,
    state: &LstmState<f64>,
    obs: &Observation,
    rng: Option<&mut R>,
) -> Result<(Action, LstmState<f64>)> {
    let features = network_features(&obs.to_vec());
    let next = nets.embed_step(&features, state)?;
    let (mu, sigma) = nets.policy_head(&next.h)?;
    let a = match rng {
        None => mu.iter().map(|m| squash(*m)).collect(),
        Some(rng) => sample_squashed(&mu, &sigma, rng)?.0,
    };
    Ok((Action::from_slice(&a)?, next))
}

/// Replay windows laid out time-major: row `t·B + b` is step `t` of window `b`.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    pub rows: usize,
    pub steps: usize,
    /// Per-window observations preceding the window, oldest first.
    pub burn_in: Vec<Vec<Vec<f64>>>,
    /// `steps + 1` matrices of B×obs_dim; entry `steps` holds the observation after the last action.
    pub obs: Vec<Matrix<f64>>,
    pub actions: Matrix<f64>,
    pub rewards: Matrix<f64>,
    pub not_done: Matrix<f64>,
    pub mask: Matrix<f64>,
}

impl TrainingBatch {
    pub fn from_replay(replay: &ReplayBuffer, windows: &[Subsequence], steps: usize, burn_in: usize) -> Result<Self> {
        let rows = windows.len();
        if rows == 0 {
            return Err(NavError::Usage("empty batch".into()));
        }
        let obs_dim = replay.episode(windows[0].episode).obs[0].len();
        let mut obs = vec![Matrix::zeros(rows, obs_dim); steps + 1];
        let mut actions = Matrix::zeros(rows * steps, ACTION_DIM);
        let mut rewards = Matrix::zeros(rows * steps, 1);
        let mut not_done = Matrix::zeros(rows * steps, 1);
        let mut mask = Matrix::zeros(rows * steps, 1);
        let mut warm = Vec::with_capacity(rows);
        for (b, w) in windows.iter().enumerate() {
            let ep = replay.episode(w.episode);
            let from = w.start.saturating_sub(burn_in);
            warm.push(ep.obs[from..w.start].to_vec());
            for t in 0..=steps.min(w.len) {
                obs[t].row_mut(b).copy_from_slice(&ep.obs[w.start + t]);
            }
            for t in 0..steps.min(w.len) {
                let r = t * rows + b;
                let k = w.start + t;
                actions.row_mut(r).copy_from_slice(&ep.actions[k]);
                rewards.set(r, 0, ep.rewards[k]);
                not_done.set(r, 0, if ep.done_at(k) { 0.0 } else { 1.0 });
                mask.set(r, 0, 1.0);
            }
        }
        Ok(Self { rows, steps, burn_in: warm, obs, actions, rewards, not_done, mask })
    }

    pub fn count(&self) -> f64 {
        self.mask.sum()
    }
}

/// Relative weights of the loss terms; all ones in normal training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub q1: f64,
    pub q2: f64,
    pub policy: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { q1: 1.0, q2: 1.0, policy: 1.0 }
    }
}

/// Gradients of one update, aligned with each network's store.
#[derive(Debug, Clone)]
pub struct AgentGradients {
    pub embedder: Gradients<f64>,
    pub q1: Gradients<f64>,
    pub q2: Gradients<f64>,
    pub policy: Gradients<f64>,
    pub log_alpha: Gradients<f64>,
    pub critic_loss: f64,
    pub policy_loss: f64,
    pub mean_q: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub policy_loss: f64,
    pub alpha: f64,
    pub mean_q: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSettings {
    pub discount: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub temperature_lr: f64,
    pub auto_temperature: bool,
    pub target_entropy: f64,
}

/// Networks plus optimizer state.
#[derive(Debug, Clone)]
pub struct SacLearner {
    pub nets: AgentNetworks,
    settings: LearnerSettings,
    opt_embedder: Optimizer<f64>,
    opt_q1: Optimizer<f64>,
    opt_q2: Optimizer<f64>,
    opt_policy: Optimizer<f64>,
    opt_alpha: Optimizer<f64>,
    updates: u64,
}

fn gaussian_noise<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix<f64> {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

fn hcat(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
    let mut data = Vec::with_capacity(a.len() + b.len());
    for r in 0..a.rows() {
        data.extend_from_slice(a.row(r));
        data.extend_from_slice(b.row(r));
    }
    Matrix::from_vec(a.rows(), a.cols() + b.cols(), data).expect("sized")
}

fn warm_states(net: &Network<f64>, burn_in: &[Vec<Vec<f64>>]) -> Result<LstmState<f64>> {
    let hidden = net.recurrent_hidden().expect("recurrent");
    let mut h = Vec::with_capacity(burn_in.len() * hidden);
    let mut c = Vec::with_capacity(burn_in.len() * hidden);
    for seq in burn_in {
        let mut s = LstmState::zeros(1, hidden);
        for o in seq {
            s = net.eval_lstm_step(&Matrix::row_vector(o.clone()), &s)?;
        }
        h.extend_from_slice(s.h.data());
        c.extend_from_slice(s.c.data());
    }
    let rows = burn_in.len();
    Ok(LstmState { h: Matrix::from_vec(rows, hidden, h)?, c: Matrix::from_vec(rows, hidden, c)? })
}

impl SacLearner {
    pub fn new(nets: AgentNetworks, settings: LearnerSettings) -> Self {
        let adam = |lr: f64, s: &ParamStore<f64>| Optimizer::adam(Direction::Descent, lr, s);
        Self {
            opt_embedder: adam(settings.critic_lr, nets.embedder.store()),
            opt_q1: adam(settings.critic_lr, nets.q1.store()),
            opt_q2: adam(settings.critic_lr, nets.q2.store()),
            opt_policy: adam(settings.actor_lr, nets.policy.store()),
            opt_alpha: adam(settings.temperature_lr, &nets.log_alpha),
            nets,
            settings,
            updates: 0,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Gradients of the critic, policy and temperature losses on one batch.
    ///
    /// The embedder is differentiated only through q1's critic term; q2 and
    /// the policy see a detached copy of the embedding.
    pub fn gradients<R: Rng + ?Sized>(&self, batch: &TrainingBatch, weights: LossWeights, rng: &mut R) -> Result<AgentGradients> {
        let nets = &self.nets;
        let (rows, steps) = (batch.rows, batch.steps);
        let n = rows * steps;
        let count = batch.count().max(1.0);
        let alpha = nets.alpha();

        // Target values, no gradient.
        let online0 = warm_states(&nets.embedder, &batch.burn_in)?;
        let target0 = warm_states(&nets.target_embedder, &batch.burn_in)?;
        let mut ts = target0;
        let mut target_next = Vec::with_capacity(steps);
        for t in 0..=steps {
            ts = nets.target_embedder.eval_lstm_step(&batch.obs[t], &ts)?;
            if t > 0 {
                target_next.push(ts.h.clone());
            }
        }
        let target_next = Matrix::vstack(&target_next.iter().collect::<Vec<_>>())?;

        let mut tape = Tape::new();
        let se = tape.bind(nets.embedder.store());
        let s1 = tape.bind(nets.q1.store());
        let s2 = tape.bind(nets.q2.store());
        let mut st = TapeLstmState { h: tape.input(online0.h), c: tape.input(online0.c) };
        let mut hs = Vec::with_capacity(steps + 1);
        for t in 0..=steps {
            let x = tape.input(batch.obs[t].clone());
            st = nets.embedder.lstm_step_tape(&mut tape, se, x, st)?;
            hs.push(st.h);
        }
        let e_cur = tape.concat_rows(&hs[..steps])?;
        let online_next = Matrix::vstack(&hs[1..].iter().map(|v| tape.value(*v)).collect::<Vec<_>>())?;

        let (mu_n, log_std_n) = nets.policy.eval_gaussian(&online_next)?;
        let eps_n = gaussian_noise(rng, n, ACTION_DIM);
        let mut next_actions = Matrix::zeros(n, ACTION_DIM);
        let mut next_logp = vec![0.0; n];
        for r in 0..n {
            let sigma: Vec<f64> = log_std_n.row(r).iter().map(|v| v.exp()).collect();
            let u: Vec<f64> = (0..ACTION_DIM).map(|j| mu_n.get(r, j) + sigma[j] * eps_n.get(r, j)).collect();
            next_logp[r] = squashed_log_prob_pre(mu_n.row(r), &sigma, &u);
            for (j, v) in u.iter().enumerate() {
                next_actions.set(r, j, squash(*v));
            }
        }
        let tq1 = nets.q1_target.eval_dense(&hcat(&target_next, &next_actions))?;
        let tq2 = nets.q2_target.eval_dense(&hcat(&target_next, &next_actions))?;
        let y: Vec<f64> = (0..n)
            .map(|r| {
                let soft = tq1.data()[r].min(tq2.data()[r]) - alpha * next_logp[r];
                batch.rewards.data()[r] + self.settings.discount * batch.not_done.data()[r] * soft
            })
            .collect();

        // Critic losses.
        let a = tape.input(batch.actions.clone());
        let yv = tape.input(Matrix::from_vec(n, 1, y)?);
        let mask = tape.input(batch.mask.clone());
        let x1 = tape.concat_cols(&[e_cur, a])?;
        let q1 = nets.q1.dense_tape(&mut tape, s1, x1)?;
        let e_det = tape.detach(e_cur);
        let x2 = tape.concat_cols(&[e_det, a])?;
        let q2 = nets.q2.dense_tape(&mut tape, s2, x2)?;
        let mut terms = Vec::with_capacity(2);
        for (q, w) in [(q1, weights.q1), (q2, weights.q2)] {
            let d = tape.sub(q, yv)?;
            let sq = tape.square(d);
            let m = tape.mul(sq, mask)?;
            let s = tape.sum_all(m);
            terms.push(tape.scale(s, w / count));
        }
        let critic = tape.add(terms[0], terms[1])?;
        let critic_loss = tape.scalar(critic);
        if !critic_loss.is_finite() {
            return Err(NavError::Numerical(format!("critic loss {critic_loss}")));
        }
        let mean_q = tape.value(q1).data().iter().zip(batch.mask.data()).map(|(q, m)| q * m).sum::<f64>() / count;
        let adj = tape.backward(critic)?;
        let g_embed = adj.gradients(se, nets.embedder.store());
        let g_q1 = adj.gradients(s1, nets.q1.store());
        let g_q2 = adj.gradients(s2, nets.q2.store());
        let e_values = tape.value(e_det).clone();
        drop(tape);

        // Policy loss on the detached embedding with frozen critics.
        let mut tape = Tape::new();
        let sp = tape.bind(nets.policy.store());
        let f1 = tape.bind_frozen(nets.q1.store());
        let f2 = tape.bind_frozen(nets.q2.store());
        let e = tape.input(e_values);
        let out = nets.policy.dense_tape(&mut tape, sp, e)?;
        let head = nets.policy.gaussian_tape(&mut tape, out)?;
        let (act, logp) = sample_tape(&mut tape, head.mu, head.log_std, gaussian_noise(rng, n, ACTION_DIM))?;
        let xp = tape.concat_cols(&[e, act])?;
        let p1 = nets.q1.dense_tape(&mut tape, f1, xp)?;
        let p2 = nets.q2.dense_tape(&mut tape, f2, xp)?;
        let qmin = tape.min(p1, p2)?;
        let alp = tape.scale(logp, alpha);
        let diff = tape.sub(alp, qmin)?;
        let mask = tape.input(batch.mask.clone());
        let masked = tape.mul(diff, mask)?;
        let total = tape.sum_all(masked);
        let policy = tape.scale(total, weights.policy / count);
        let policy_loss = tape.scalar(policy);
        if !policy_loss.is_finite() {
            return Err(NavError::Numerical(format!("policy loss {policy_loss}")));
        }
        let g_policy = tape.backward(policy)?.gradients(sp, nets.policy.store());
        let mean_logp =
            tape.value(logp).data().iter().zip(batch.mask.data()).map(|(l, m)| l * m).sum::<f64>() / count;

        let mut g_alpha = Gradients::zeros_like(&nets.log_alpha);
        if self.settings.auto_temperature {
            g_alpha.get_mut(ParamId(0)).data_mut()[0] = -(mean_logp + self.settings.target_entropy);
        }
        Ok(AgentGradients {
            embedder: g_embed,
            q1: g_q1,
            q2: g_q2,
            policy: g_policy,
            log_alpha: g_alpha,
            critic_loss,
            policy_loss,
            mean_q,
            entropy: -mean_logp,
        })
    }

    /// Applies gradients and soft-updates the targets.
    pub fn apply(&mut self, g: &AgentGradients) -> Result<()> {
        self.opt_embedder.step(self.nets.embedder.store_mut(), &g.embedder)?;
        self.opt_q1.step(self.nets.q1.store_mut(), &g.q1)?;
        self.opt_q2.step(self.nets.q2.store_mut(), &g.q2)?;
        self.opt_policy.step(self.nets.policy.store_mut(), &g.policy)?;
        if self.settings.auto_temperature {
            self.opt_alpha.step(&mut self.nets.log_alpha, &g.log_alpha)?;
        }
        self.nets.soft_update_targets(self.settings.tau)?;
        self.updates += 1;
        if !self.nets.all_finite() {
            return Err(NavError::Numerical("network parameters diverged".into()));
        }
        Ok(())
    }

    pub fn update<R: Rng + ?Sized>(&mut self, batch: &TrainingBatch, rng: &mut R) -> Result<UpdateStats> {
        let g = self.gradients(batch, LossWeights::default(), rng)?;
        self.apply(&g)?;
        Ok(UpdateStats {
            critic_loss: g.critic_loss,
            policy_loss: g.policy_loss,
            alpha: self.nets.alpha(),
            mean_q: g.mean_q,
            entropy: g.entropy,
        })
    }
}

//! Maximum-entropy IRL: per-branch reward networks fitted so that the
//! Boltzmann policy over a discrete action grid explains expert actions.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::DeviceAction;
use crate::diff::{
    load_network, save_network, Activation, Direction, Gradients, Matrix, Network, NetworkSpec, Optimizer,
    OptimizerKind, Tape,
};
use crate::env::{network_features, TrackingMode};
use crate::error::{NavError, Result};
use crate::vessel::{PointRef, TargetBranch};

/// Fully connected layers in a reward network, output layer included.
pub const REWARD_NET_LAYERS: usize = 4;
pub const DEFAULT_REWARD_HIDDEN: [usize; 3] = [64, 64, 32];
/// Observation width the reward network consumes (dual tracking).
pub const REWARD_OBS_DIM: usize = 30;
pub const REWARD_INPUT_DIM: usize = REWARD_OBS_DIM + DeviceAction::<f64>::DIM;

/// Per-branch reward network R(s, a).
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    branch: TargetBranch,
    net: Network<f64>,
}

impl RewardModel {
    pub fn new(branch: TargetBranch, hidden: [usize; 3], seed: u64) -> Result<Self> {
        let spec = NetworkSpec::mlp(REWARD_INPUT_DIM, &hidden, 1, Activation::Tanh);
        Self::from_network(branch, Network::new(spec, seed)?)
    }

    pub fn from_network(branch: TargetBranch, net: Network<f64>) -> Result<Self> {
        let spec = net.spec();
        if spec.layers.len() != REWARD_NET_LAYERS
            || spec.recurrent.is_some()
            || spec.gaussian_head.is_some()
            || spec.input_dim != REWARD_INPUT_DIM
            || spec.output_dim() != 1
        {
            return Err(NavError::Config(format!(
                "reward_model: need {REWARD_NET_LAYERS} dense layers mapping {REWARD_INPUT_DIM} inputs to 1 output"
            )));
        }
        Ok(Self { branch, net })
    }

    pub fn branch(&self) -> TargetBranch {
        self.branch
    }

    pub fn network(&self) -> &Network<f64> {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network<f64> {
        &mut self.net
    }

    fn check_obs(obs: &[f64]) -> Result<()> {
        if obs.len() != REWARD_OBS_DIM {
            return Err(NavError::Shape(format!(
                "reward model needs a dual-tracking observation of {REWARD_OBS_DIM}, got {}",
                obs.len()
            )));
        }
        Ok(())
    }

    /// R(s, a) for one observation/action pair.
    pub fn reward(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        Self::check_obs(obs)?;
        if action.len() != DeviceAction::<f64>::DIM {
            return Err(NavError::Shape(format!("action width {}", action.len())));
        }
        let mut row = network_features(obs);
        row.extend_from_slice(action);
        let v = self.net.eval_dense(&Matrix::row_vector(row))?.data()[0];
        if !v.is_finite() {
            return Err(NavError::Numerical(format!("{} reward model produced {v}", self.branch)));
        }
        Ok(v)
    }

    /// R(s, a) for every grid action.
    pub fn rewards_over_grid(&self, obs: &[f64], grid: &ActionGrid) -> Result<Vec<f64>> {
        Self::check_obs(obs)?;
        let out = self.net.eval_dense(&grid_inputs(&[obs], grid))?;
        let v = out.into_vec();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(NavError::Numerical(format!("{} reward model produced a non-finite value", self.branch)));
        }
        Ok(v)
    }

    pub fn save(&self, dir: &Path, iterations: u64) -> Result<()> {
        save_network(&self.net, dir, iterations, serde_json::json!({ "branch": self.branch.as_str() }))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (net, manifest) = load_network::<f64>(dir)?;
        let branch = manifest.meta["branch"]
            .as_str()
            .ok_or_else(|| NavError::Config(format!("reward_model: {} has no branch tag", dir.display())))?
            .parse()?;
        Self::from_network(branch, net)
    }
}

/// Finite action set over which the Boltzmann policy normalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    levels: usize,
    actions: Vec<[f64; 4]>,
}

impl ActionGrid {
    /// `levels` evenly spaced values per channel on [−1, 1]; must be odd so
    /// that zero is included.
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 || levels % 2 == 0 {
            return Err(NavError::Config(format!("grid_levels: must be odd and positive, got {levels}")));
        }
        let vals: Vec<f64> = if levels == 1 {
            vec![0.0]
        } else {
            (0..levels).map(|i| -1.0 + 2.0 * i as f64 / (levels - 1) as f64).collect()
        };
        let mut actions = Vec::with_capacity(levels.pow(4));
        for a in &vals {
            for b in &vals {
                for c in &vals {
                    for d in &vals {
                        actions.push([*a, *b, *c, *d]);
                    }
                }
            }
        }
        Ok(Self { levels, actions })
    }

    /// The 81-action grid with each channel in {−1, 0, 1}.
    pub fn standard() -> Self {
        Self::new(3).expect("valid")
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> &[[f64; 4]] {
        &self.actions
    }

    pub fn action(&self, i: usize) -> [f64; 4] {
        self.actions[i]
    }

    pub fn zero_index(&self) -> usize {
        self.actions.len() / 2
    }

    /// Index of the grid action nearest to `a`, channel by channel.
    pub fn nearest(&self, a: &[f64]) -> usize {
        let l = self.levels;
        if l == 1 {
            return 0;
        }
        a.iter().take(4).fold(0, |idx, v| {
            let pos = ((v.clamp(-1.0, 1.0) + 1.0) * (l - 1) as f64 / 2.0).round() as usize;
            idx * l + pos.min(l - 1)
        })
    }
}

/// Rows `[obs_b, grid_g]` ordered by sample then grid action.
fn grid_inputs(obs: &[&[f64]], grid: &ActionGrid) -> Matrix<f64> {
    let mut data = Vec::with_capacity(obs.len() * grid.len() * REWARD_INPUT_DIM);
    for o in obs {
        let f = network_features(o);
        for a in grid.actions() {
            data.extend_from_slice(&f);
            data.extend_from_slice(a);
        }
    }
    Matrix::from_vec(obs.len() * grid.len(), REWARD_INPUT_DIM, data).expect("sized")
}

/// Softmax with max subtraction.
pub fn boltzmann_from_rewards(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(NavError::Config("action grid is empty".into()));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(NavError::Numerical("non-finite reward in Boltzmann policy".into()));
    }
    let mx = rewards.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let e: Vec<f64> = rewards.iter().map(|r| (r - mx).exp()).collect();
    let z: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / z).collect())
}

/// π(a|s) ∝ exp R(s, a) over the grid.
pub fn boltzmann_policy(model: &RewardModel, obs: &[f64], grid: &ActionGrid) -> Result<Vec<f64>> {
    boltzmann_from_rewards(&model.rewards_over_grid(obs, grid)?)
}

/// One expert step with its action snapped to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertSample {
    pub obs: Vec<f64>,
    pub action: usize,
}

/// Objective `mean log π(a_e|s) + λ·mean H(π(·|s))` and its parameter gradient.
pub fn irl_objective(
    model: &RewardModel,
    batch: &[ExpertSample],
    grid: &ActionGrid,
    entropy_weight: f64,
) -> Result<(f64, Gradients<f64>)> {
    if batch.is_empty() {
        return Err(NavError::Config("irl batch is empty".into()));
    }
    let obs: Vec<&[f64]> = batch.iter().map(|s| s.obs.as_slice()).collect();
    for o in &obs {
        RewardModel::check_obs(o)?;
    }
    let idx: Vec<usize> = batch.iter().map(|s| s.action).collect();
    if idx.iter().any(|i| *i >= grid.len()) {
        return Err(NavError::Shape("expert action index outside the grid".into()));
    }
    let net = model.network();
    let mut tape = Tape::new();
    let slot = tape.bind(net.store());
    let x = tape.input(grid_inputs(&obs, grid));
    let r = net.dense_tape(&mut tape, slot, x)?;
    let logits = tape.reshape(r, batch.len(), grid.len())?;
    let lse = tape.logsumexp_rows(logits);
    let picked = tape.select_per_row(logits, &idx)?;
    let ll = tape.sub(picked, lse)?;
    let mut objective = tape.mean(ll);
    if entropy_weight != 0.0 {
        let logp = tape.sub(logits, lse)?;
        let p = tape.exp(logp);
        let plogp = tape.mul(p, logp)?;
        let neg_h = tape.sum_cols(plogp);
        let mean_neg_h = tape.mean(neg_h);
        let bonus = tape.scale(mean_neg_h, -entropy_weight);
        objective = tape.add(objective, bonus)?;
    }
    let value = tape.scalar(objective);
    if !value.is_finite() {
        return Err(NavError::Numerical("non-finite IRL objective".into()));
    }
    let grads = tape.backward(objective)?.gradients(slot, net.store());
    Ok((value, grads))
}

/// Gradient of the mean expert log-likelihood (plus entropy bonus).
pub fn irl_gradient(
    model: &RewardModel,
    batch: &[ExpertSample],
    grid: &ActionGrid,
    entropy_weight: f64,
) -> Result<Gradients<f64>> {
    irl_objective(model, batch, grid, entropy_weight).map(|(_, g)| g)
}

/// Mean log π(a_e|s) over `samples`.
pub fn mean_log_likelihood(model: &RewardModel, samples: &[ExpertSample], grid: &ActionGrid) -> Result<f64> {
    if samples.is_empty() {
        return Err(NavError::Config("no samples".into()));
    }
    let mut total = 0.0;
    for chunk in samples.chunks(256) {
        let obs: Vec<&[f64]> = chunk.iter().map(|s| s.obs.as_slice()).collect();
        let r = model.network().eval_dense(&grid_inputs(&obs, grid))?;
        for (k, s) in chunk.iter().enumerate() {
            let row = &r.data()[k * grid.len()..(k + 1) * grid.len()];
            let mx = row.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            let lse = mx + row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            total += row[s.action] - lse;
        }
    }
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlConfig {
    pub learning_rate: f64,
    /// Gradient-ascent updates per branch.
    pub iterations: u64,
    /// Values per action channel; the grid has `grid_levels^4` actions.
    pub grid_levels: usize,
    pub batch_size: usize,
    pub entropy_weight: f64,
    pub optimizer: OptimizerKind,
    pub hidden: [usize; 3],
    pub seed: u64,
    pub log_every: u64,
}

impl Default for IrlConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            iterations: 10_000,
            grid_levels: 3,
            batch_size: 32,
            entropy_weight: 0.0,
            optimizer: OptimizerKind::Adam,
            hidden: DEFAULT_REWARD_HIDDEN,
            seed: 0,
            log_every: 500,
        }
    }
}

impl IrlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(NavError::Config("learning_rate: must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(NavError::Config("batch_size: must be positive".into()));
        }
        if self.log_every == 0 {
            return Err(NavError::Config("log_every: must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(NavError::Config("hidden: sizes must be positive".into()));
        }
        if !self.entropy_weight.is_finite() || self.entropy_weight < 0.0 {
            return Err(NavError::Config("entropy_weight: must be finite and non-negative".into()));
        }
        ActionGrid::new(self.grid_levels).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrlLogEntry {
    pub iteration: u64,
    pub mean_log_likelihood: f64,
}

/// Fits one branch's reward model on that branch's samples only.
pub fn train_branch(
    branch: TargetBranch,
    samples: &[ExpertSample],
    config: &IrlConfig,
) -> Result<(RewardModel, Vec<IrlLogEntry>)> {
    config.validate()?;
    if samples.is_empty() {
        return Err(NavError::Config(format!("corpus: no {branch} demonstrations")));
    }
    let grid = ActionGrid::new(config.grid_levels)?;
    let mut model = RewardModel::new(branch, config.hidden, config.seed)?;
    let mut opt = Optimizer::new(config.optimizer, Direction::Ascent, config.learning_rate, model.network().store());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ branch_stream(branch));
    let mut log = vec![IrlLogEntry { iteration: 0, mean_log_likelihood: mean_log_likelihood(&model, samples, &grid)? }];
    let mut batch = Vec::with_capacity(config.batch_size);
    for it in 1..=config.iterations {
        batch.clear();
        for _ in 0..config.batch_size {
            batch.push(samples[rng.random_range(0..samples.len())].clone());
        }
        let (_, grads) = irl_objective(&model, &batch, &grid, config.entropy_weight)
            .map_err(|e| NavError::Training { iteration: it, message: e.to_string() })?;
        opt.step(model.network_mut().store_mut(), &grads)?;
        if !model.network().store().all_finite() {
            return Err(NavError::Training { iteration: it, message: "reward parameters diverged".into() });
        }
        if it % config.log_every == 0 || it == config.iterations {
            log.push(IrlLogEntry { iteration: it, mean_log_likelihood: mean_log_likelihood(&model, samples, &grid)? });
        }
    }
    Ok((model, log))
}

fn branch_stream(branch: TargetBranch) -> u64 {
    match branch {
        TargetBranch::RICA => 0x5249_4341,
        TargetBranch::LICA => 0x4c49_4341,
    }
}

/// Reward models for both carotid branches.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchModels {
    pub rica: RewardModel,
    pub lica: RewardModel,
}

impl BranchModels {
    pub fn new(rica: RewardModel, lica: RewardModel) -> Result<Self> {
        if rica.branch() != TargetBranch::RICA || lica.branch() != TargetBranch::LICA {
            return Err(NavError::Config("irl_models: branch tags do not match their slots".into()));
        }
        Ok(Self { rica, lica })
    }

    pub fn get(&self, branch: TargetBranch) -> &RewardModel {
        match branch {
            TargetBranch::RICA => &self.rica,
            TargetBranch::LICA => &self.lica,
        }
    }

    pub fn save(&self, dir: &Path, iterations: u64) -> Result<()> {
        for b in TargetBranch::BOTH {
            self.get(b).save(&model_dir(dir, b), iterations)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let load = |b: TargetBranch| -> Result<RewardModel> {
            let m = RewardModel::load(&model_dir(dir, b))?;
            if m.branch() != b {
                return Err(NavError::Validation(format!("{} holds a {} model", model_dir(dir, b).display(), m.branch())));
            }
            Ok(m)
        };
        Self::new(load(TargetBranch::RICA)?, load(TargetBranch::LICA)?)
    }
}

/// Checkpoint directory of one branch's model inside `dir`.
pub fn model_dir(dir: &Path, branch: TargetBranch) -> PathBuf {
    dir.join(branch.as_str().to_lowercase())
}

/// Training logs for both branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlLogs {
    pub rica: Vec<IrlLogEntry>,
    pub lica: Vec<IrlLogEntry>,
}

/// Trains one reward model per branch, each on its own demonstrations.
pub fn train_irl(corpus: &DemoCorpus, config: &IrlConfig) -> Result<(BranchModels, IrlLogs)> {
    config.validate()?;
    let grid = ActionGrid::new(config.grid_levels)?;
    let (rica, rlog) = train_branch(TargetBranch::RICA, &corpus.expert_samples(TargetBranch::RICA, &grid), config)?;
    let (lica, llog) = train_branch(TargetBranch::LICA, &corpus.expert_samples(TargetBranch::LICA, &grid), config)?;
    Ok((BranchModels::new(rica, lica)?, IrlLogs { rica: rlog, lica: llog }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoStep {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
}

/// One recorded expert navigation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub branch: TargetBranch,
    pub target: PointRef,
    pub steps: Vec<DemoStep>,
    pub outcome: bool,
    /// Episode seed, enough to replay the run through the environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Demonstration {
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(NavError::Validation("demonstration has no steps".into()));
        }
        let obs_dim = TrackingMode::Dual.obs_dim();
        for (i, s) in self.steps.iter().enumerate() {
            if s.obs.len() != obs_dim {
                return Err(NavError::Validation(format!("step {i}: observation width {} != {obs_dim}", s.obs.len())));
            }
            if s.action.len() != DeviceAction::<f64>::DIM {
                return Err(NavError::Validation(format!("step {i}: action width {}", s.action.len())));
            }
            if s.obs.iter().chain(&s.action).any(|v| !v.is_finite()) {
                return Err(NavError::Validation(format!("step {i}: non-finite value")));
            }
            if s.action.iter().any(|a| a.abs() > 1.0) {
                return Err(NavError::Validation(format!("step {i}: action outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

/// Demonstrations split by branch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemoCorpus {
    pub rica: Vec<Demonstration>,
    pub lica: Vec<Demonstration>,
}

impl DemoCorpus {
    pub fn demos(&self, branch: TargetBranch) -> &[Demonstration] {
        match branch {
            TargetBranch::RICA => &self.rica,
            TargetBranch::LICA => &self.lica,
        }
    }

    pub fn len(&self) -> usize {
        self.rica.len() + self.lica.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every step of one branch's demos, actions snapped to the grid.
    pub fn expert_samples(&self, branch: TargetBranch, grid: &ActionGrid) -> Vec<ExpertSample> {
        self.demos(branch)
            .iter()
            .inspect(|d| assert_eq!(d.branch, branch, "cross-branch demonstration"))
            .flat_map(|d| d.steps.iter())
            .map(|s| ExpertSample { obs: s.obs.clone(), action: grid.nearest(&s.action) })
            .collect()
    }
}

/// File holding one branch's demonstrations inside a corpus directory.
pub fn demo_file(dir: &Path, branch: TargetBranch) -> PathBuf {
    dir.join(format!("{}.jsonl", branch.as_str().to_lowercase()))
}

/// Parses one branch file; every record must belong to `branch`.
pub fn load_demo_file(path: &Path, branch: TargetBranch) -> Result<Vec<Demonstration>> {
    let text = fs::read_to_string(path)?;
    let mut demos = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let demo: Demonstration = serde_json::from_str(line)
            .map_err(|e| NavError::Parse { line: i + 1, message: e.to_string() })?;
        demo.validate().map_err(|e| NavError::Validation(format!("line {}: {e}", i + 1)))?;
        if demo.branch != branch {
            return Err(NavError::Validation(format!(
                "line {}: {} demonstration in the {} file",
                i + 1,
                demo.branch,
                branch
            )));
        }
        demos.push(demo);
    }
    if demos.is_empty() {
        return Err(NavError::Parse { line: 1, message: format!("{} holds no demonstrations", path.display()) });
    }
    Ok(demos)
}

/// Loads `rica.jsonl` and `lica.jsonl` from `dir`; a missing file leaves that branch empty.
pub fn load_demo_corpus(dir: &Path) -> Result<DemoCorpus> {
    let mut corpus = DemoCorpus::default();
    let mut found = false;
    for b in TargetBranch::BOTH {
        let path = demo_file(dir, b);
        if path.exists() {
            found = true;
            let demos = load_demo_file(&path, b)?;
            match b {
                TargetBranch::RICA => corpus.rica = demos,
                TargetBranch::LICA => corpus.lica = demos,
            }
        }
    }
    if !found {
        return Err(NavError::Config(format!("demos: no demonstration files in {}", dir.display())));
    }
    Ok(corpus)
}

/// Appends one demonstration to its branch file.
pub fn append_demonstration(dir: &Path, demo: &Demonstration) -> Result<PathBuf> {
    demo.validate()?;
    fs::create_dir_all(dir)?;
    let path = demo_file(dir, demo.branch);
    let mut f = fs::OpenOptions::new().create(true).append(true).open(&path)?;
    writeln!(f, "{}", serde_json::to_string(demo)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: u64, grid: &ActionGrid) -> ExpertSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ExpertSample { obs: (0..30).map(|_| rng.random_range(-50.0..50.0)).collect(), action: rng.random_range(0..grid.len()) }
    }

    #[test]
    fn grid_has_81_actions_and_zero() {
        let g = ActionGrid::standard();
        assert_eq!(g.len(), 81);
        assert_eq!(g.action(g.zero_index()), [0.0; 4]);
        for (i, a) in g.actions().iter().enumerate() {
            assert_eq!(g.nearest(a), i);
        }
        assert_eq!(g.nearest(&[0.4, -0.6, 0.9, -0.2]), g.nearest(&[0.0, -1.0, 1.0, 0.0]));
        assert!(ActionGrid::new(2).is_err());
        assert_eq!(ActionGrid::new(1).unwrap().len(), 1);
    }

    #[test]
    fn boltzmann_closed_form() {
        let p = boltzmann_from_rewards(&[1.0, 0.0]).unwrap();
        assert!((p[0] - 0.7311).abs() < 1e-4 && (p[1] - 0.2689).abs() < 1e-4);
        assert_eq!(boltzmann_from_rewards(&[2.0; 4]).unwrap(), vec![0.25; 4]);
        assert!(matches!(boltzmann_from_rewards(&[f64::NAN]), Err(NavError::Numerical(_))));
    }

    #[test]
    fn one_action_grid_gives_zero_gradient() {
        let grid = ActionGrid::new(1).unwrap();
        let model = RewardModel::new(TargetBranch::RICA, [4, 4, 3], 1).unwrap();
        let batch: Vec<_> = (0..5).map(|s| sample(s, &grid)).collect();
        let g = irl_gradient(&model, &batch, &grid, 0.0).unwrap();
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let grid = ActionGrid::standard();
        let model = RewardModel::new(TargetBranch::LICA, [4, 4, 3], 2).unwrap();
        let batch: Vec<_> = (0..6).map(|s| sample(s, &grid)).collect();
        let doubled: Vec<_> = batch.iter().chain(&batch).cloned().collect();
        let a = irl_gradient(&model, &batch, &grid, 0.0).unwrap().flatten();
        let b = irl_gradient(&model, &doubled, &grid, 0.0).unwrap().flatten();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn reward_model_requires_four_layers() {
        let spec = NetworkSpec::mlp(REWARD_INPUT_DIM, &[8, 8], 1, Activation::Tanh);
        let net = Network::new(spec, 0).unwrap();
        assert!(matches!(RewardModel::from_network(TargetBranch::RICA, net), Err(NavError::Config(_))));
    }

    #[test]
    fn demo_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = demo_file(dir.path(), TargetBranch::RICA);
        fs::write(&path, "").unwrap();
        assert!(matches!(load_demo_file(&path, TargetBranch::RICA), Err(NavError::Parse { .. })));
        let demo = Demonstration {
            branch: TargetBranch::LICA,
            target: PointRef::new(3, 4),
            steps: vec![DemoStep { obs: vec![0.0; 30], action: vec![0.0; 4] }],
            outcome: true,
            seed: Some(1),
        };
        fs::write(&path, format!("{}\n", serde_json::to_string(&demo).unwrap())).unwrap();
        assert!(matches!(load_demo_file(&path, TargetBranch::RICA), Err(NavError::Validation(_))));
        fs::write(&path, format!("{}\n{{oops\n", serde_json::to_string(&Demonstration { branch: TargetBranch::RICA, ..demo.clone() }).unwrap())).unwrap();
        match load_demo_file(&path, TargetBranch::RICA) {
            Err(NavError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let grid = ActionGrid::standard();
        let samples: Vec<_> = (0..4).map(|s| sample(s, &grid)).collect();
        let cfg = IrlConfig { iterations: 0, hidden: [4, 4, 3], seed: 9, ..IrlConfig::default() };
        let (m, log) = train_branch(TargetBranch::RICA, &samples, &cfg).unwrap();
        assert_eq!(m, RewardModel::new(TargetBranch::RICA, [4, 4, 3], 9).unwrap());
        assert_eq!(log.len(), 1);
    }
}

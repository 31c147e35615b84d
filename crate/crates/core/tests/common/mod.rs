#![allow(dead_code)]

use std::sync::Arc;

use std::collections::HashMap;

use navrl_core::env::{Action, EnvConfig, EpisodeStatus, NavEnv};
use navrl_core::pilot::ScriptedPilot;
use navrl_core::{build_synthetic_tree, sample_targets, PointRef, Split, TargetBranch, TargetSet, Tree, TreeConfig};
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reduced tree (aorta plus both carotid branches) and its targets.
pub fn reduced_setup(seed: u64) -> (Arc<Tree>, Vec<TargetSet>) {
    let tree = Arc::new(build_synthetic_tree(&TreeConfig::reduced(seed)).unwrap());
    let targets = TargetBranch::BOTH.iter().map(|b| sample_targets(&tree, *b, seed).unwrap()).collect();
    (tree, targets)
}

/// Dual observations visited by a noisy scripted pilot heading for `branch` targets.
pub fn visited_observations(
    tree: &Arc<Tree>,
    targets: &[TargetSet],
    branch: TargetBranch,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut env = NavEnv::new(tree.clone(), EnvConfig { target_split: Split::Train, ..EnvConfig::default() }, targets.to_vec()).unwrap();
    let pool: Vec<_> = env.target_pool().into_iter().filter(|(b, _)| *b == branch).map(|(_, t)| t).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut episode = 0u64;
    while out.len() < count {
        let target = pool[rng.random_range(0..pool.len())];
        let mut obs = env.reset(target, seed.wrapping_add(episode)).unwrap();
        episode += 1;
        let pilot = ScriptedPilot::new(&env);
        loop {
            if rng.random_bool(0.5) {
                out.push(obs.to_vec());
            }
            let action = if rng.random_bool(0.3) {
                Action::from_slice(&(0..4).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>()).unwrap()
            } else {
                pilot.act(&env)
            };
            let (next, _, status) = env.step(action).unwrap();
            obs = next;
            if status.is_terminal() || out.len() >= count {
                break;
            }
        }
    }
    out
}

use navrl_core::irl::{
    boltzmann_from_rewards, train_branch, ActionGrid, DemoCorpus, DemoStep, Demonstration, ExpertSample, IrlConfig,
    RewardModel,
};

/// Known teacher reward R(s, a) = β·Σ_j a_j·(W·φ(s))_j with φ the network
/// features of the observation and W drawn from a seeded standard normal.
pub struct LinearTeacher {
    pub w: Vec<[f64; 30]>,
    pub beta: f64,
}

impl LinearTeacher {
    pub fn new(seed: u64, beta: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0..4)
            .map(|_| {
                let mut row = [0.0; 30];
                for v in &mut row {
                    *v = rng.sample(rand_distr::StandardNormal);
                }
                row
            })
            .collect();
        Self { w, beta }
    }

    pub fn rewards_over_grid(&self, obs: &[f64], grid: &ActionGrid) -> Vec<f64> {
        let phi = navrl_core::env::network_features(obs);
        let g: Vec<f64> = self.w.iter().map(|row| row.iter().zip(&phi).map(|(a, b)| a * b).sum()).collect();
        grid.actions().iter().map(|a| self.beta * a.iter().zip(&g).map(|(x, y)| x * y).sum::<f64>()).collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best })
}

/// Fraction of held-out states where the learned reward's best grid action
/// equals the teacher's.
pub fn argmax_agreement(student: &RewardModel, teacher: &LinearTeacher, states: &[Vec<f64>], grid: &ActionGrid) -> f64 {
    let hits = states
        .iter()
        .filter(|s| argmax(&student.rewards_over_grid(s, grid).unwrap()) == argmax(&teacher.rewards_over_grid(s, grid)))
        .count();
    hits as f64 / states.len() as f64
}

/// Expert actions drawn from the teacher's Boltzmann policy.
pub fn synthetic_expert(teacher: &LinearTeacher, states: &[Vec<f64>], grid: &ActionGrid, seed: u64) -> Vec<ExpertSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    states
        .iter()
        .map(|s| {
            let p = boltzmann_from_rewards(&teacher.rewards_over_grid(s, grid)).unwrap();
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut action = p.len() - 1;
            for (i, pi) in p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    action = i;
                    break;
                }
            }
            ExpertSample { obs: s.clone(), action }
        })
        .collect()
}

pub struct RecoverySetup {
    pub train_states: usize,
    pub heldout_states: usize,
    pub teacher_beta: f64,
    pub config: IrlConfig,
}

/// Trains on synthetic expert data for each branch of the reduced tree and
/// returns the held-out argmax agreement per branch.
pub fn irl_recovery(setup: &RecoverySetup) -> Vec<(TargetBranch, f64, RewardModel)> {
    let (tree, targets) = reduced_setup(3);
    let grid = ActionGrid::new(setup.config.grid_levels).unwrap();
    TargetBranch::BOTH
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let states = visited_observations(&tree, &targets, *b, setup.train_states + setup.heldout_states, 40 + k as u64);
            let (train, heldout) = states.split_at(setup.train_states);
            let teacher = LinearTeacher::new(1000 + k as u64, setup.teacher_beta);
            let samples = synthetic_expert(&teacher, train, &grid, 77 + k as u64);
            let (student, _) = train_branch(*b, &samples, &setup.config).unwrap();
            (*b, argmax_agreement(&student, &teacher, heldout, &grid), student)
        })
        .collect()
}

/// Reduced-tree targets truncated to `train` / `test` per branch.
pub fn truncated_targets(targets: &[TargetSet], train: usize, test: usize) -> Vec<TargetSet> {
    targets
        .iter()
        .map(|s| TargetSet { train: s.train[..train].to_vec(), test: s.test[..test].to_vec(), ..s.clone() })
        .collect()
}

/// Centerline graph: consecutive points joined by their Euclidean distance,
/// each child's first point joined to its attachment point at zero cost.
pub fn centerline_graph(tree: &Tree) -> (UnGraph<PointRef, f64>, HashMap<PointRef, NodeIndex>) {
    let mut g = UnGraph::new_undirected();
    let mut idx = HashMap::new();
    for (r, _) in tree.points() {
        idx.insert(r, g.add_node(r));
    }
    for s in tree.segments() {
        for i in 1..s.centerline.len() {
            let a = PointRef { segment: s.id, index: i - 1 };
            let b = PointRef { segment: s.id, index: i };
            g.add_edge(idx[&a], idx[&b], s.centerline[i - 1].distance(s.centerline[i]));
        }
        if let Some(par) = s.parent {
            g.add_edge(idx[&PointRef { segment: s.id, index: 0 }], idx[&par], 0.0);
        }
    }
    (g, idx)
}

/// Successful scripted-pilot demonstrations on the training targets, with a
/// fraction `noise` of actions replaced by uniform random ones.
pub fn pilot_corpus(env: &mut NavEnv, episodes_per_branch: usize, noise: f64, seed: u64) -> DemoCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = DemoCorpus::default();
    for branch in TargetBranch::BOTH {
        let pool: Vec<_> = env.target_pool().into_iter().filter(|(b, _)| *b == branch).map(|(_, t)| t).collect();
        for i in 0..episodes_per_branch {
            let episode_seed = seed.wrapping_add(i as u64);
            env.reset(pool[i % pool.len()], episode_seed).unwrap();
            let pilot = ScriptedPilot::new(env);
            let mut steps = Vec::new();
            loop {
                let action = if rng.random_bool(noise) {
                    Action::from_slice(&(0..4).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>()).unwrap()
                } else {
                    pilot.act(env)
                }
                .clamped();
                let obs = env.dual_observation().to_vec();
                let (_, _, status) = env.step(action).unwrap();
                steps.push(DemoStep { obs, action: action.to_array().to_vec() });
                if status.is_terminal() {
                    break;
                }
            }
            if env.status() == EpisodeStatus::Success {
                let demo = Demonstration { branch, target: env.target(), steps, outcome: true, seed: Some(episode_seed) };
                match branch {
                    TargetBranch::RICA => corpus.rica.push(demo),
                    TargetBranch::LICA => corpus.lica.push(demo),
                }
            }
        }
    }
    corpus
}

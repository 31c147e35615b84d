mod common;

use common::*;
use navrl_core::env::{EnvConfig, NavEnv};
use navrl_core::sac::{
    covered_fraction, evaluate, path_ratio, train, AgentController, AgentNetworks, EpisodeEval, EpisodeRecord,
    LearnerSettings, LossWeights, ReplayBuffer, SacConfig, SacLearner, TrainingBatch,
};
use navrl_core::{NavError, PointRef, Split, TargetBranch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn settings() -> LearnerSettings {
    LearnerSettings {
        discount: 0.99,
        tau: 0.005,
        actor_lr: 3e-4,
        critic_lr: 3e-4,
        temperature_lr: 3e-4,
        auto_temperature: true,
        target_entropy: -4.0,
    }
}

fn random_replay(seed: u64, episodes: usize) -> ReplayBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = || (0..30).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let mut buf = ReplayBuffer::new(100);
    let mut rng2 = ChaCha8Rng::seed_from_u64(seed + 1);
    for e in 0..episodes {
        let mut ep = EpisodeRecord::new(obs());
        for _ in 0..(10 + 3 * e) {
            let a = [0; 4].map(|_| rng2.random_range(-1.0..1.0));
            ep.push(a, rng2.random_range(-0.01..0.01), obs());
        }
        ep.terminal = e % 2 == 0;
        buf.push(ep);
    }
    buf
}

fn batch(seed: u64) -> TrainingBatch {
    let replay = random_replay(seed, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let windows = replay.sample(&mut rng, 3, 6).unwrap();
    TrainingBatch::from_replay(&replay, &windows, 6, 3).unwrap()
}

fn learner(seed: u64) -> SacLearner {
    SacLearner::new(AgentNetworks::new(30, 8, &[16, 16], 0.5, seed).unwrap(), settings())
}

fn all_zero(v: &[f64]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

#[test]
fn embedder_gets_no_gradient_without_the_q1_loss() {
    for seed in 0..5 {
        let mut l = learner(seed);
        let b = batch(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = l.gradients(&b, LossWeights { q1: 0.0, q2: 1.0, policy: 1.0 }, &mut rng).unwrap();
        assert!(all_zero(&g.embedder.flatten()));
        assert!(!all_zero(&g.q2.flatten()));
        assert!(!all_zero(&g.policy.flatten()));
        let before = l.nets.embedder.store().flatten();
        l.apply(&g).unwrap();
        let after = l.nets.embedder.store().flatten();
        assert_eq!(before.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), after.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn q1_loss_alone_drives_the_embedder_and_only_q1() {
    let l = learner(1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = l.gradients(&batch(1), LossWeights { q1: 1.0, q2: 0.0, policy: 0.0 }, &mut rng).unwrap();
    assert!(!all_zero(&g.embedder.flatten()));
    assert!(!all_zero(&g.q1.flatten()));
    assert!(all_zero(&g.q2.flatten()));
    assert!(all_zero(&g.policy.flatten()));
}

#[test]
fn targets_start_equal_and_unit_tau_copies() {
    let mut nets = AgentNetworks::new(30, 8, &[16, 16], 1.0, 4).unwrap();
    assert_eq!(nets.embedder.store().flatten(), nets.target_embedder.store().flatten());
    assert_eq!(nets.q1.store().flatten(), nets.q1_target.store().flatten());
    assert_eq!(nets.q2.store().flatten(), nets.q2_target.store().flatten());
    assert_ne!(nets.q1.store().flatten(), nets.q2.store().flatten());
    let mut l = SacLearner::new(nets.clone(), settings());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    l.update(&batch(0), &mut rng).unwrap();
    assert_ne!(l.nets.q1.store().flatten(), l.nets.q1_target.store().flatten());
    nets = l.nets.clone();
    nets.soft_update_targets(1.0).unwrap();
    assert_eq!(nets.q1.store().flatten(), nets.q1_target.store().flatten());
    assert_eq!(nets.embedder.store().flatten(), nets.target_embedder.store().flatten());
}

#[test]
fn zero_rewards_keep_updates_finite() {
    let mut b = batch(2);
    b.rewards.data_mut().iter_mut().for_each(|r| *r = 0.0);
    let mut l = learner(2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let s = l.update(&b, &mut rng).unwrap();
        assert!(s.critic_loss.is_finite() && s.policy_loss.is_finite() && s.alpha.is_finite());
    }
    assert!(l.nets.all_finite());
}

#[test]
fn path_ratio_is_the_mean_covered_fraction() {
    assert_eq!(covered_fraction(true, 100.0, 40.0), 1.0);
    assert_eq!(covered_fraction(false, 100.0, 50.0), 0.5);
    assert_eq!(covered_fraction(false, 100.0, 130.0), 0.0);
    assert_eq!(covered_fraction(false, 0.0, 0.0), 1.0);
    let ep = |f: f64| EpisodeEval {
        target: PointRef::new(0, 0),
        branch: TargetBranch::RICA,
        success: f == 1.0,
        ticks: 1,
        procedure_time_s: None,
        initial_pathlength: 1.0,
        final_pathlength: 1.0 - f,
        covered_fraction: f,
    };
    assert!((path_ratio(&[ep(1.0), ep(0.5), ep(1.0)]) - 250.0 / 3.0).abs() < 1e-12);
    assert_eq!(path_ratio(&[]), 0.0);
}

fn tiny_config(seed: u64) -> SacConfig {
    SacConfig {
        total_steps: 600,
        eval_interval: 300,
        eval_episodes: 4,
        batch_size: 2,
        sequence_length: 8,
        burn_in: 2,
        lstm_hidden: 8,
        hidden: vec![16, 16],
        prefill_episodes: 1,
        update_every: 5,
        initial_temperature: 1e-3,
        seed,
        ..SacConfig::default()
    }
}

fn factory(tree: std::sync::Arc<navrl_core::Tree>, targets: Vec<navrl_core::TargetSet>) -> impl Fn(Split) -> navrl_core::Result<NavEnv> {
    move |split| {
        NavEnv::new(tree.clone(), EnvConfig { target_split: split, targets_per_branch: Some(3), ..EnvConfig::default() }, targets.clone())
    }
}

#[test]
fn training_is_bitwise_deterministic() {
    let (tree, targets) = reduced_setup(3);
    let f = factory(tree, targets);
    let a = train(&tiny_config(5), &f, |_, _| {}).unwrap();
    let b = train(&tiny_config(5), &f, |_, _| {}).unwrap();
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.log, b.log);
    let bits = |n: &AgentNetworks| n.policy.store().flatten().iter().chain(&n.embedder.store().flatten()).map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.networks), bits(&b.networks));
    assert_eq!(a.reports.iter().map(|r| r.exploration_steps).collect::<Vec<_>>(), vec![0, 300, 600]);
    let c = train(&tiny_config(6), &f, |_, _| {}).unwrap();
    assert_ne!(bits(&a.networks), bits(&c.networks));
}

#[test]
fn zero_budget_returns_the_baseline_evaluation() {
    let (tree, targets) = reduced_setup(3);
    let out = train(&SacConfig { total_steps: 0, ..tiny_config(0) }, &factory(tree, targets), |_, _| {}).unwrap();
    assert_eq!(out.reports.len(), 1);
    assert_eq!(out.reports[0].exploration_steps, 0);
    assert_eq!(out.best_index, 0);
}

#[test]
fn zero_policy_never_moves_and_scores_nothing() {
    let (tree, targets) = reduced_setup(3);
    let mut nets = AgentNetworks::new(30, 8, &[16, 16], 1.0, 0).unwrap();
    let ids: Vec<_> = nets.policy.store().ids().collect();
    for id in ids {
        nets.policy.store_mut().get_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let mut env = factory(tree, targets)(Split::Test).unwrap();
    let mut ctl = AgentController::<ChaCha8Rng>::deterministic(&nets);
    let r = evaluate(&mut ctl, &mut env, 6, 0, 0).unwrap();
    assert_eq!(r.success_rate, 0.0);
    assert_eq!(r.path_ratio, 0.0);
    assert_eq!(r.procedure_time, None);
    assert!(r.episodes.iter().all(|e| e.ticks == 400));
}

#[test]
fn evaluation_is_deterministic_and_test_split_only() {
    let (tree, targets) = reduced_setup(3);
    let f = factory(tree, targets);
    let nets = AgentNetworks::new(30, 8, &[16, 16], 1.0, 9).unwrap();
    let run = |seed| {
        let mut env = f(Split::Test).unwrap();
        evaluate(&mut AgentController::<ChaCha8Rng>::deterministic(&nets), &mut env, 8, 0, seed).unwrap()
    };
    let (a, b) = (run(1), run(1));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let test_targets: Vec<_> = f(Split::Test).unwrap().target_pool();
    assert!(a.episodes.iter().all(|e| test_targets.contains(&(e.branch, e.target))));
    let mut train_env = f(Split::Train).unwrap();
    let err = evaluate(&mut AgentController::<ChaCha8Rng>::deterministic(&nets), &mut train_env, 2, 0, 0).unwrap_err();
    assert!(matches!(err, NavError::Config(m) if m.contains("target_split")));
}

#[test]
fn invalid_configs_name_the_field() {
    let cases: Vec<(SacConfig, &str)> = vec![
        (SacConfig { eval_interval: 0, ..SacConfig::default() }, "eval_interval"),
        (SacConfig { discount: 1.5, ..SacConfig::default() }, "discount"),
        (SacConfig { tau: 0.0, ..SacConfig::default() }, "tau"),
        (SacConfig { batch_size: 0, ..SacConfig::default() }, "batch_size"),
        (SacConfig { hidden: vec![0], ..SacConfig::default() }, "hidden"),
    ];
    for (c, field) in cases {
        let err = c.validate().unwrap_err();
        assert!(matches!(&err, NavError::Config(m) if m.starts_with(field)), "{err}");
    }
}

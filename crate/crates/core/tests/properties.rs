mod common;

use common::*;
use navrl_core::device::{check_invariants, reset_devices, step_devices, DeviceAction, DeviceSpecs};
use navrl_core::env::{network_features, TransitionInfo};
use navrl_core::irl::{boltzmann_from_rewards, ActionGrid};
use navrl_core::rewards::{dense_reward, PATHLENGTH_COEFFICIENT, STEP_PENALTY, SUCCESS_BONUS};
use navrl_core::sac::{covered_fraction, EpisodeRecord, ReplayBuffer};
use navrl_core::PointRef;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn boltzmann_is_a_shift_invariant_distribution(rewards in prop::collection::vec(-50.0f64..50.0, 1..100), shift in -1e3f64..1e3) {
        let p = boltzmann_from_rewards(&rewards).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        let shifted: Vec<f64> = rewards.iter().map(|r| r + shift).collect();
        let q = boltzmann_from_rewards(&shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let best = rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let i = rewards.iter().position(|r| *r == best).unwrap();
        prop_assert!(p.iter().all(|v| *v <= p[i]));
    }

    #[test]
    fn dense_reward_is_affine_in_progress(dpl in -20.0f64..20.0, reached: bool) {
        let info = TransitionInfo { delta_pathlength: dpl, reached, distance_to_target: 1.0, pathlength_to_target: 1.0 };
        let want = -0.005 - 0.001 * dpl + if reached { 1.0 } else { 0.0 };
        prop_assert!((dense_reward(&info) - want).abs() <= 1e-12);
        prop_assert_eq!((STEP_PENALTY, PATHLENGTH_COEFFICIENT, SUCCESS_BONUS), (-0.005, 0.001, 1.0));
    }

    #[test]
    fn covered_fraction_stays_in_unit_interval(initial in 0.0f64..500.0, remaining in 0.0f64..800.0, success: bool) {
        let f = covered_fraction(success, initial, remaining);
        prop_assert!((0.0..=1.0).contains(&f));
        if success { prop_assert_eq!(f, 1.0); }
    }

    #[test]
    fn grid_snapping_picks_the_nearest_action(a in prop::array::uniform4(-1.0f64..1.0)) {
        let grid = ActionGrid::standard();
        let i = grid.nearest(&a);
        let d = |g: &[f64; 4]| g.iter().zip(&a).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let best = grid.actions().iter().map(d).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(d(&grid.action(i)), best);
    }

    #[test]
    fn features_scale_positions_only(obs in prop::collection::vec(-500.0f64..500.0, 30)) {
        let f = network_features(&obs);
        for i in 0..26 { prop_assert_eq!(f[i], obs[i] * 0.01); }
        for i in 26..30 { prop_assert_eq!(f[i], obs[i]); }
    }

    #[test]
    fn replay_windows_never_cross_episodes(lens in prop::collection::vec(1usize..40, 1..8), count in 1usize..10, len in 1usize..20, seed: u64) {
        let mut buf = ReplayBuffer::new(5);
        for (e, n) in lens.iter().enumerate() {
            let mut ep = EpisodeRecord::new(vec![e as f64]);
            for t in 0..*n { ep.push([0.0; 4], 0.0, vec![(e * 100 + t) as f64]); }
            buf.push(ep);
        }
        prop_assert!(buf.len() <= 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in buf.sample(&mut rng, count, len).unwrap() {
            prop_assert!(w.len >= 1 && w.len <= len);
            prop_assert!(w.start + w.len <= buf.episode(w.episode).len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn devices_stay_valid_under_random_actions(actions in prop::collection::vec(prop::array::uniform4(-1.5f64..1.5), 1..120)) {
        let (tree, _) = reduced_setup(3);
        let specs = DeviceSpecs::default();
        let mut s = reset_devices(&tree, &specs, PointRef::new(0, 0)).unwrap();
        for a in actions {
            s = step_devices(&tree, &specs, &s, &DeviceAction::new(a[0], a[1], a[2], a[3]));
            let r = check_invariants(&tree, &specs, &s);
            prop_assert!(r.is_ok(), "{:?}", r);
        }
    }
}

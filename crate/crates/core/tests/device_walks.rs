mod common;

use common::*;
use navrl_core::device::{check_invariants, reset_devices, step_devices, DeviceAction, DeviceSpecs};
use navrl_core::PointRef;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Long random walks with out-of-range commands exercise wall sliding, retraction to the
// floor and catheter extension past the wire.
#[test]
fn long_random_walks_keep_device_invariants() {
    let (tree, _) = reduced_setup(3);
    let specs = DeviceSpecs::default();
    for seed in 0..150u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = reset_devices(&tree, &specs, PointRef::new(0, 0)).unwrap();
        for t in 0..400 {
            let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
            s = step_devices(&tree, &specs, &s, &DeviceAction::new(a[0], a[1], a[2], a[3]));
            if let Err(e) = check_invariants(&tree, &specs, &s) {
                panic!("seed {seed} tick {t}: {e}");
            }
        }
    }
}

#[test]
fn advancing_straight_keeps_exact_spacing() {
    let (tree, _) = reduced_setup(3);
    let specs = DeviceSpecs::default();
    let mut s = reset_devices(&tree, &specs, PointRef::new(0, 0)).unwrap();
    for _ in 0..3 {
        s = step_devices(&tree, &specs, &s, &DeviceAction::new(0.0, 1.0, 0.0, 0.0));
    }
    let body = &s.guidewire.body;
    let n = body.len();
    for w in body[1..n].windows(2) {
        assert!((w[0].distance(w[1]) - 2.0).abs() < 1e-9, "{}", w[0].distance(w[1]));
    }
}

//! Scripted demonstrator with privileged access to the tree: follows the
//! centerline route to the target by steering the guidewire heading toward a
//! look-ahead point and backing out of wrong branches. Used to produce
//! synthetic demonstrations and as a reference controller in tests.

use std::collections::HashSet;

use crate::env::{Action, NavEnv};
use crate::vessel::{PointRef, SegmentId, VesselTree};

/// Centerline points from `from` (on the root segment) to `target`, in travel order.
pub fn route(tree: &VesselTree<f64>, from: PointRef, target: PointRef) -> Vec<PointRef> {
    let mut chain = vec![target];
    let mut cur = target;
    while let Some(p) = tree.segment(cur.segment).and_then(|s| s.parent) {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    let mut out = Vec::new();
    for (k, stop) in chain.iter().enumerate() {
        let start = if k == 0 { from.index } else { 0 };
        let seg: SegmentId = stop.segment;
        if start <= stop.index {
            out.extend((start..=stop.index).map(|i| PointRef { segment: seg, index: i }));
        } else {
            out.extend((stop.index..=start).rev().map(|i| PointRef { segment: seg, index: i }));
        }
    }
    out.dedup_by(|a, b| tree.point(*a) == tree.point(*b));
    out
}

#[derive(Debug, Clone)]
pub struct ScriptedPilot {
    route: Vec<PointRef>,
    on_route: HashSet<PointRef>,
    /// Route points of look-ahead.
    pub lookahead: usize,
    /// Catheter trails the guidewire tip by about this much, mm.
    pub catheter_lag: f64,
}

impl ScriptedPilot {
    pub fn new(env: &NavEnv) -> Self {
        let route = route(env.tree(), env.config().insertion, env.target());
        let on_route = route.iter().copied().collect();
        Self { route, on_route, lookahead: 4, catheter_lag: 20.0 }
    }

    pub fn act(&self, env: &NavEnv) -> Action {
        let tree = env.tree();
        let state = env.state();
        let gw = &state.guidewire;
        let tip = gw.tip();
        let (snap, _) = tree.nearest_centerline_point(tip);
        let cath_follow = if state.catheter.inserted_length < gw.inserted_length - self.catheter_lag { 1.0 } else { 0.0 };
        let Some(pos) = self.route.iter().position(|r| *r == snap).filter(|_| self.on_route.contains(&snap)) else {
            return Action::new(0.0, -1.0, 0.0, 0.0);
        };
        let ahead = self.route[(pos + self.lookahead).min(self.route.len() - 1)];
        let goal = if pos + 1 >= self.route.len() { env.target_point() } else { tree.point(ahead).unwrap() };
        let Some(dir) = (goal - tip).normalized() else {
            return Action::zero();
        };
        let h = gw.tip_heading;
        let n = tree.projection_plane().normal();
        let axis = (n - h * n.dot(h)).normalized().unwrap_or(n);
        let angle = axis.cross(h).dot(dir).atan2(h.dot(dir)).to_degrees();
        let spec = &env.specs().guidewire;
        let per_tick = spec.steer_gain * spec.max_rotation_rate * env.config().dt();
        let rot = (angle / per_tick).clamp(-1.0, 1.0);
        let trans = if angle.abs() > 60.0 { 0.25 } else { 1.0 };
        Action::new(rot, trans, 0.0, cath_follow)
    }
}

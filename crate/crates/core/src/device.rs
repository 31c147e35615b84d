//! Quasi-static follow-the-leader kinematics for a steerable guidewire and a
//! coaxial catheter driven from the proximal end.
//!
//! Each device is a route polyline (`path_history`) from the insertion point to
//! its tip. Advancing pushes the tip along its heading in sub-steps no longer
//! than the node spacing, confining every new tip position to the lumen; wall
//! contact turns the heading into the sliding direction. Retracting removes
//! length from the distal end of the route. The catheter route is the
//! guidewire route truncated to the catheter length, plus at most one node
//! spacing of self-steered extension beyond the wire tip.

use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};
use crate::geometry::{Vec2, Vec3};
use crate::scalar::Scalar;
use crate::vessel::{BranchLabel, PointRef, VesselTree};

/// Seconds per control tick at 7.5 Hz.
pub const CONTROL_DT: f64 = 1.0 / 7.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Guidewire,
    Catheter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec<T> {
    pub name: DeviceKind,
    /// mm
    pub node_spacing: T,
    /// deg/s
    pub max_rotation_rate: T,
    /// mm/s
    pub max_translation_rate: T,
    pub tip_point_count: usize,
    /// Degrees of in-plane tip-angle change per degree of proximal rotation.
    pub steer_gain: T,
}

impl<T: Scalar> DeviceSpec<T> {
    pub fn standard(name: DeviceKind) -> Self {
        Self {
            name,
            node_spacing: T::lit(2.0),
            max_rotation_rate: T::lit(180.0),
            max_translation_rate: T::lit(40.0),
            tip_point_count: 3,
            steer_gain: T::lit(0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.node_spacing, self.max_rotation_rate, self.max_translation_rate, self.steer_gain];
        if pos.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(NavError::Config(format!("{:?} spec has a non-positive parameter", self.name)));
        }
        if self.tip_point_count != 3 {
            return Err(NavError::Config("tip_point_count must be 3".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpecs<T> {
    pub guidewire: DeviceSpec<T>,
    pub catheter: DeviceSpec<T>,
}

impl<T: Scalar> Default for DeviceSpecs<T> {
    fn default() -> Self {
        Self {
            guidewire: DeviceSpec::standard(DeviceKind::Guidewire),
            catheter: DeviceSpec::standard(DeviceKind::Catheter),
        }
    }
}

impl<T: Scalar> DeviceSpecs<T> {
    pub fn get(&self, kind: DeviceKind) -> &DeviceSpec<T> {
        match kind {
            DeviceKind::Guidewire => &self.guidewire,
            DeviceKind::Catheter => &self.catheter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceState<T> {
    pub inserted_length: T,
    /// Resampled device body, proximal entry first, tip last; at least three points.
    pub body: Vec<Vec3<T>>,
    pub tip_heading: Vec3<T>,
    /// Route of the tip from the insertion point to the current tip.
    pub path_history: Vec<Vec3<T>>,
}

impl<T: Scalar> DeviceState<T> {
    pub fn tip(&self) -> Vec3<T> {
        *self.path_history.last().expect("route is never empty")
    }

    fn at_insertion(p: Vec3<T>, heading: Vec3<T>, spacing: T) -> Self {
        Self { inserted_length: spacing, body: vec![p; 3], tip_heading: heading, path_history: vec![p] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState<T> {
    pub guidewire: DeviceState<T>,
    pub catheter: DeviceState<T>,
    pub tick: u64,
    pub dt: T,
}

impl<T: Scalar> SimState<T> {
    pub fn device(&self, kind: DeviceKind) -> &DeviceState<T> {
        match kind {
            DeviceKind::Guidewire => &self.guidewire,
            DeviceKind::Catheter => &self.catheter,
        }
    }
}

/// Normalized device velocity commands, each in [-1, 1] after clamping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviceAction<T> {
    pub gw_rotation: T,
    pub gw_translation: T,
    pub cath_rotation: T,
    pub cath_translation: T,
}

impl<T: Serialize> Serialize for DeviceAction<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [&self.gw_rotation, &self.gw_translation, &self.cath_rotation, &self.cath_translation].serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for DeviceAction<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[T; 4]>::deserialize(d).map(Into::into)
    }
}

impl<T> From<[T; 4]> for DeviceAction<T> {
    fn from([a, b, c, d]: [T; 4]) -> Self {
        Self { gw_rotation: a, gw_translation: b, cath_rotation: c, cath_translation: d }
    }
}

impl<T> From<DeviceAction<T>> for [T; 4] {
    fn from(a: DeviceAction<T>) -> Self {
        [a.gw_rotation, a.gw_translation, a.cath_rotation, a.cath_translation]
    }
}

impl<T: Scalar> DeviceAction<T> {
    pub const DIM: usize = 4;

    pub fn new(gw_rotation: T, gw_translation: T, cath_rotation: T, cath_translation: T) -> Self {
        Self { gw_rotation, gw_translation, cath_rotation, cath_translation }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn to_array(self) -> [T; 4] {
        self.into()
    }

    pub fn from_slice(s: &[T]) -> Result<Self> {
        match s {
            [a, b, c, d] => Ok(Self::new(*a, *b, *c, *d)),
            _ => Err(NavError::Shape(format!("action needs 4 channels, got {}", s.len()))),
        }
    }

    /// Each channel clamped to [-1, 1]; NaN maps to 0.
    pub fn clamped(self) -> Self {
        let c = |v: T| if v.is_nan() { T::zero() } else { v.max(-T::one()).min(T::one()) };
        Self::new(c(self.gw_rotation), c(self.gw_translation), c(self.cath_rotation), c(self.cath_translation))
    }
}

/// Places both devices at the insertion point with heading along the local centerline.
pub fn reset_devices<T: Scalar>(
    tree: &VesselTree<T>,
    specs: &DeviceSpecs<T>,
    insertion: PointRef,
) -> Result<SimState<T>> {
    specs.guidewire.validate()?;
    specs.catheter.validate()?;
    let p = tree
        .point(insertion)
        .ok_or_else(|| NavError::Geometry(format!("insertion {insertion:?} is not on the tree")))?;
    if tree.label_of(insertion) != Some(BranchLabel::CommonIliac) {
        return Err(NavError::Geometry("insertion must lie on the common iliac".into()));
    }
    let heading = tree.tangent(insertion).expect("valid ref");
    Ok(SimState {
        guidewire: DeviceState::at_insertion(p, heading, specs.guidewire.node_spacing),
        catheter: DeviceState::at_insertion(p, heading, specs.catheter.node_spacing),
        tick: 0,
        dt: T::lit(CONTROL_DT),
    })
}

fn rotate_heading<T: Scalar>(tree: &VesselTree<T>, heading: Vec3<T>, spec: &DeviceSpec<T>, cmd: T, dt: T) -> Vec3<T> {
    if cmd == T::zero() {
        return heading;
    }
    let deg = spec.steer_gain * cmd * spec.max_rotation_rate * dt;
    // steer about the plane normal's component orthogonal to the heading so the
    // turn angle is exact even for slightly out-of-plane headings
    let n = tree.projection_plane().normal();
    let axis = (n - heading * n.dot(heading)).normalized().unwrap_or(n);
    let r = heading.rotated_about(axis, deg.to_radians());
    r.normalized().unwrap_or(heading)
}

/// Confines `proposed` to the lumen without moving further than `max` from `from`.
fn confine_step<T: Scalar>(tree: &VesselTree<T>, from: Vec3<T>, proposed: Vec3<T>, max: T) -> Vec3<T> {
    let mut p = tree.confine_to_lumen(proposed);
    // shorten and re-confine until the step fits; converges quickly along a smooth wall
    for _ in 0..8 {
        let d = p.distance(from);
        if d <= max {
            return p;
        }
        let q = from.lerp(p, max / d);
        if tree.inside_lumen(q) {
            return q;
        }
        p = tree.confine_to_lumen(q);
    }
    from
}

/// Appends `p` to the route, splitting wall-slide steps longer than `spacing`. Returns the arc
/// added, or `None` when the step cannot be split inside the lumen.
fn push_subdivided<T: Scalar>(
    tree: &VesselTree<T>,
    path: &mut Vec<Vec3<T>>,
    p: Vec3<T>,
    spacing: T,
    depth: u32,
) -> Option<T> {
    let tip = *path.last().expect("route is never empty");
    let len = tip.distance(p);
    if len <= spacing {
        path.push(p);
        return Some(len);
    }
    if depth == 0 {
        return None;
    }
    let m = tree.confine_to_lumen(tip.lerp(p, T::lit(0.5)));
    Some(push_subdivided(tree, path, m, spacing, depth - 1)? + push_subdivided(tree, path, p, spacing, depth - 1)?)
}

/// Pushes the tip forward by up to `delta` mm. Returns the arc actually travelled.
fn advance<T: Scalar>(
    tree: &VesselTree<T>,
    path: &mut Vec<Vec3<T>>,
    heading: &mut Vec3<T>,
    delta: T,
    spacing: T,
) -> T {
    let n = (delta / spacing).ceil().to_usize().unwrap_or(1).max(1);
    let h = delta / T::from_usize(n).expect("small count");
    let mut travelled = T::zero();
    for _ in 0..n {
        let tip = *path.last().expect("route is never empty");
        let proposed = tip + *heading * h;
        let next = tree.confine_to_lumen(proposed);
        let d = next - tip;
        let len = d.norm();
        if len <= T::lit(1e-12) {
            break;
        }
        if next != proposed && len > h * T::lit(0.25) {
            *heading = d * (T::one() / len);
        }
        let mark = path.len();
        match push_subdivided(tree, path, next, spacing, 6) {
            Some(arc) => travelled += arc,
            None => {
                path.truncate(mark);
                break;
            }
        }
    }
    travelled
}

/// Removes up to `delta` mm from the distal end of the route. Returns the arc removed.
fn retract<T: Scalar>(tree: &VesselTree<T>, path: &mut Vec<Vec3<T>>, delta: T) -> T {
    let mut remaining = delta;
    let mut removed = T::zero();
    while remaining > T::zero() && path.len() > 1 {
        let n = path.len();
        let (prev, last) = (path[n - 2], path[n - 1]);
        let seg = last.distance(prev);
        if seg <= remaining {
            path.pop();
            remaining -= seg;
            removed += seg;
        } else {
            path[n - 1] = tree.confine_to_lumen(last.lerp(prev, remaining / seg));
            removed += remaining;
            remaining = T::zero();
        }
    }
    removed
}

/// Cumulative arc along a polyline.
fn cumulative<T: Scalar>(path: &[Vec3<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(path.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in path.windows(2) {
        acc += w[0].distance(w[1]);
        out.push(acc);
    }
    out
}

/// Prefix of `path` with arc length `s` (clamped to the path length).
fn prefix<T: Scalar>(tree: &VesselTree<T>, path: &[Vec3<T>], cum: &[T], s: T) -> Vec<Vec3<T>> {
    let total = *cum.last().expect("non-empty");
    if s >= total {
        return path.to_vec();
    }
    let k = cum.partition_point(|c| *c <= s);
    let mut out = path[..k].to_vec();
    let (a, b) = (cum[k - 1], cum[k]);
    if s > a {
        let p = path[k - 1].lerp(path[k], (s - a) / (b - a));
        if tree.inside_lumen(p) {
            out.push(p);
        }
    }
    out
}

/// Body points every `spacing` of arc back from the tip, proximal first, padded to three points.
/// Route vertices where the route bends are kept so the body arc matches the route arc.
pub fn resample_body<T: Scalar>(tree: &VesselTree<T>, path: &[Vec3<T>], spacing: T) -> Vec<Vec3<T>> {
    let cum = cumulative(path);
    let total = *cum.last().expect("non-empty");
    let n = path.len();
    // (arc, point, forced)
    let mut stations: Vec<(T, Vec3<T>, bool)> = Vec::new();
    let mut forced = vec![false; n];
    forced[0] = true;
    forced[n - 1] = true;
    let mut k = n - 1;
    let mut s = total - spacing;
    while s > T::zero() {
        while k > 0 && cum[k - 1] > s {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        let (a, b) = (cum[k - 1], cum[k]);
        if s == a {
            forced[k - 1] = true;
        } else if s >= b {
            forced[k] = true;
        } else {
            let p = path[k - 1].lerp(path[k], (s - a) / (b - a));
            if tree.inside_lumen(p) {
                stations.push((s, p, true));
            } else {
                // chord cuts a curved wall: keep both ends of the route step instead
                forced[k - 1] = true;
                forced[k] = true;
            }
        }
        s -= spacing;
    }
    let mut merged: Vec<(T, Vec3<T>, bool)> = path.iter().zip(&cum).zip(&forced).map(|((p, c), f)| (*c, *p, *f)).collect();
    merged.extend(stations);
    merged.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite arc"));

    // drop unforced vertices lying on the line through their neighbours
    let tol = spacing * T::lit(1e-9);
    let mut body: Vec<Vec3<T>> = Vec::with_capacity(merged.len());
    for i in 0..merged.len() {
        let (_, p, f) = merged[i];
        if !f && i + 1 < merged.len() {
            if let Some(&prev) = body.last() {
                let next = merged[i + 1].1;
                if let Some(u) = (next - prev).normalized() {
                    let off = p - prev;
                    if (off - u * off.dot(u)).norm() <= tol && off.dot(u) >= T::zero() {
                        continue;
                    }
                }
            }
        }
        if body.last() != Some(&p) || body.is_empty() {
            body.push(p);
        }
    }
    while body.len() < 3 {
        body.insert(0, path[0]);
    }
    body
}

/// Advances the simulation by one control tick.
pub fn step_devices<T: Scalar>(
    tree: &VesselTree<T>,
    specs: &DeviceSpecs<T>,
    state: &SimState<T>,
    action: &DeviceAction<T>,
) -> SimState<T> {
    let a = action.clamped();
    let dt = state.dt;
    let mut next = state.clone();
    next.tick += 1;

    let gs = &specs.guidewire;
    let gw = &mut next.guidewire;
    gw.tip_heading = rotate_heading(tree, gw.tip_heading, gs, a.gw_rotation, dt);
    let delta = a.gw_translation * gs.max_translation_rate * dt;
    let mut gw_moved = false;
    if delta > T::zero() {
        let got = advance(tree, &mut gw.path_history, &mut gw.tip_heading, delta, gs.node_spacing);
        gw.inserted_length += got;
        gw_moved = got > T::zero();
    } else if delta < T::zero() {
        let got = retract(tree, &mut gw.path_history, -delta);
        gw_moved = got > T::zero();
        // confinement of the cut point can shift the arc slightly, so recount it
        gw.inserted_length = gs.node_spacing + crate::geometry::polyline_length(&gw.path_history);
    }
    if gw_moved {
        gw.body = resample_body(tree, &gw.path_history, gs.node_spacing);
    }

    let cs = &specs.catheter;
    let cath_heading = rotate_heading(tree, next.catheter.tip_heading, cs, a.cath_rotation, dt);
    let cdelta = a.cath_translation * cs.max_translation_rate * dt;
    let ext_before = next.catheter.path_history.len() > 1
        && next.catheter.inserted_length > next.guidewire.inserted_length;
    let rotated_ext = ext_before && a.cath_rotation != T::zero();
    if gw_moved || cdelta != T::zero() || rotated_ext {
        let gw = &next.guidewire;
        let gw_cum = cumulative(&gw.path_history);
        let gw_arc = *gw_cum.last().expect("non-empty");
        let cur = next.catheter.inserted_length - cs.node_spacing;
        let limit = gw.inserted_length + gs.node_spacing - cs.node_spacing;
        let want = (cur + cdelta).max(T::zero()).min(limit);
        let mut route = prefix(tree, &gw.path_history, &gw_cum, want);
        if want > gw_arc {
            let tip = gw.tip();
            let allowance = want - gw_arc;
            let ext = confine_step(tree, tip, tip + cath_heading * allowance, allowance);
            if ext != tip {
                route.push(ext);
            }
        }
        let cath = &mut next.catheter;
        cath.inserted_length = if route.len() == 1 {
            cs.node_spacing
        } else {
            cs.node_spacing + *cumulative(&route).last().expect("non-empty")
        };
        cath.body = resample_body(tree, &route, cs.node_spacing);
        cath.path_history = route;
    }
    next.catheter.tip_heading = cath_heading;
    next
}

/// Projected tip point and the two preceding body points; index 0 is the tip.
pub fn tracked_tip_points<T: Scalar>(tree: &VesselTree<T>, state: &SimState<T>, device: DeviceKind) -> [Vec2<T>; 3] {
    let body = &state.device(device).body;
    let n = body.len();
    [
        tree.project_to_plane(body[n - 1]),
        tree.project_to_plane(body[n - 2]),
        tree.project_to_plane(body[n - 3]),
    ]
}

/// Checks the `SimState` invariants; used by tests and debug assertions.
pub fn check_invariants<T: Scalar>(tree: &VesselTree<T>, specs: &DeviceSpecs<T>, s: &SimState<T>) -> Result<()> {
    let fail = |m: String| Err(NavError::Validation(m));
    for kind in [DeviceKind::Guidewire, DeviceKind::Catheter] {
        let d = s.device(kind);
        let spec = specs.get(kind);
        let slack = spec.node_spacing * T::lit(1.0 + 1e-9);
        if d.inserted_length < spec.node_spacing - T::lit(1e-9) {
            return fail(format!("{kind:?} inserted length below floor"));
        }
        if d.body.len() < 3 {
            return fail(format!("{kind:?} body has fewer than 3 points"));
        }
        for w in d.body.windows(2) {
            if w[0].distance(w[1]) > slack {
                return fail(format!("{kind:?} body spacing exceeds node spacing"));
            }
        }
        if let Some(p) = d.body.iter().chain(&d.path_history).find(|p| !tree.inside_lumen(**p)) {
            return fail(format!("{kind:?} point {p:?} outside lumen"));
        }
        let arc = crate::geometry::polyline_length(&d.body);
        if (arc - (d.inserted_length - spec.node_spacing)).abs() > slack {
            return fail(format!("{kind:?} body arc {arc} inconsistent with inserted length {}", d.inserted_length));
        }
    }
    if s.catheter.inserted_length > s.guidewire.inserted_length + specs.guidewire.node_spacing + T::lit(1e-9) {
        return fail("catheter beyond guidewire by more than one node spacing".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vessel::{build_synthetic_tree, TreeConfig};

    fn setup() -> (VesselTree<f64>, DeviceSpecs<f64>, SimState<f64>) {
        let tree: VesselTree<f64> =
            build_synthetic_tree(&TreeConfig { out_of_plane: 0.0, ..TreeConfig::reduced(7) }).unwrap();
        let specs = DeviceSpecs::default();
        let s = reset_devices(&tree, &specs, PointRef::new(0, 0)).unwrap();
        (tree, specs, s)
    }

    fn act(a: f64, b: f64, c: f64, d: f64) -> DeviceAction<f64> {
        DeviceAction::new(a, b, c, d)
    }

    #[test]
    fn reset_places_tip_at_insertion() {
        let (tree, specs, s) = setup();
        assert_eq!(s.guidewire.tip(), tree.point(PointRef::new(0, 0)).unwrap());
        assert_eq!(s.tick, 0);
        assert_eq!(s, reset_devices(&tree, &specs, PointRef::new(0, 0)).unwrap());
        let rica = tree.find_label(BranchLabel::RightInternalCarotid).unwrap().id;
        let err = reset_devices(&tree, &specs, PointRef { segment: rica, index: 3 });
        assert!(matches!(err, Err(NavError::Geometry(_))));
        assert!(reset_devices(&tree, &specs, PointRef::new(99, 0)).is_err());
    }

    #[test]
    fn zero_action_only_ticks() {
        let (tree, specs, s0) = setup();
        let s1 = step_devices(&tree, &specs, &s0, &act(0.0, 1.0, 0.0, 1.0));
        let s2 = step_devices(&tree, &specs, &s1, &DeviceAction::zero());
        let mut expect = s1.clone();
        expect.tick += 1;
        assert_eq!(s2, expect);
    }

    #[test]
    fn full_translation_grows_by_cap_times_dt() {
        let (tree, specs, s0) = setup();
        let s1 = step_devices(&tree, &specs, &s0, &act(0.0, 1.0, 0.0, 0.0));
        let grown = s1.guidewire.inserted_length - s0.guidewire.inserted_length;
        assert!((grown - 40.0 / 7.5).abs() < 1e-9, "{grown}");
    }

    #[test]
    fn full_rotation_turns_heading_by_gain_times_24_degrees() {
        let (tree, specs, s0) = setup();
        let s1 = step_devices(&tree, &specs, &s0, &act(1.0, 0.0, 0.0, 0.0));
        let cos = s0.guidewire.tip_heading.dot(s1.guidewire.tip_heading);
        let angle = cos.clamp(-1.0, 1.0).acos().to_degrees();
        assert!((angle - 0.5 * 24.0).abs() < 1e-9, "{angle}");
    }

    #[test]
    fn retraction_floors_at_one_node_spacing() {
        let (tree, specs, mut s) = setup();
        for _ in 0..5 {
            s = step_devices(&tree, &specs, &s, &act(0.0, 1.0, 0.0, 1.0));
        }
        for _ in 0..20 {
            s = step_devices(&tree, &specs, &s, &act(0.0, -1.0, 0.0, -1.0));
            assert!(s.guidewire.inserted_length >= 2.0);
            check_invariants(&tree, &specs, &s).unwrap();
        }
        assert_eq!(s.guidewire.inserted_length, 2.0);
        assert_eq!(s.catheter.inserted_length, 2.0);
    }

    #[test]
    fn advance_then_retract_restores_length() {
        let (tree, specs, s0) = setup();
        let s1 = step_devices(&tree, &specs, &s0, &act(0.0, 1.0, 0.0, 0.0));
        let s2 = step_devices(&tree, &specs, &s1, &act(0.0, 0.7, 0.0, 0.0));
        let s3 = step_devices(&tree, &specs, &s2, &act(0.0, -0.7, 0.0, 0.0));
        assert!((s3.guidewire.inserted_length - s1.guidewire.inserted_length).abs() < 1e-9);
    }

    #[test]
    fn tracked_points_of_straight_body_are_spaced() {
        let (tree, specs, s0) = setup();
        let fresh = tracked_tip_points(&tree, &s0, DeviceKind::Guidewire);
        assert!(fresh.iter().all(|p| *p == fresh[0]));
        let mut s = s0;
        for _ in 0..3 {
            s = step_devices(&tree, &specs, &s, &act(0.0, 1.0, 0.0, 0.0));
        }
        let pts = tracked_tip_points(&tree, &s, DeviceKind::Guidewire);
        assert_eq!(pts[0], tree.project_to_plane(s.guidewire.tip()));
        assert!((pts[0].distance(pts[1]) - 2.0).abs() < 1e-9);
        assert!((pts[1].distance(pts[2]) - 2.0).abs() < 1e-9);
        let cross = (pts[1].x - pts[0].x) * (pts[2].z - pts[0].z) - (pts[1].z - pts[0].z) * (pts[2].x - pts[0].x);
        assert!(cross.abs() < 1e-9);
    }

    #[test]
    fn catheter_rides_guidewire() {
        let (tree, specs, mut s) = setup();
        for i in 0..40 {
            let a = if i % 3 == 0 { act(0.4, 1.0, -0.3, 1.0) } else { act(-0.2, 0.8, 0.5, 1.0) };
            s = step_devices(&tree, &specs, &s, &a);
            check_invariants(&tree, &specs, &s).unwrap();
        }
        assert!(s.catheter.inserted_length > 20.0);
    }
}

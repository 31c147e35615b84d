use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BranchLabel, PointRef, ProjectionPlane, SegmentId, VesselSegment, VesselTree};
use crate::error::{NavError, Result};
use crate::geometry::Vec3;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeLayout {
    /// Iliac, aorta, arch with brachiocephalic, carotids, subclavians and a vertebral branch.
    Full,
    /// Iliac, aorta and a terminal split into the two carotid/ICA pairs.
    Reduced,
}

/// Lumen radii per vessel, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusConfig {
    pub iliac: f64,
    pub aorta: f64,
    pub arch: f64,
    pub ascending: f64,
    pub brachiocephalic: f64,
    pub subclavian: f64,
    pub common_carotid: f64,
    pub internal_carotid: f64,
    pub vertebral: f64,
}

impl Default for RadiusConfig {
    fn default() -> Self {
        Self {
            iliac: 5.0,
            aorta: 10.0,
            arch: 12.0,
            ascending: 13.0,
            brachiocephalic: 6.5,
            subclavian: 4.5,
            common_carotid: 5.0,
            internal_carotid: 3.5,
            vertebral: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub seed: u64,
    /// Uniform scale applied to all lengths (not radii).
    pub scale: f64,
    /// Centerline sampling pitch, mm.
    pub pitch: f64,
    pub layout: TreeLayout,
    pub radii: RadiusConfig,
    /// Max in-plane perturbation of segment end points, mm.
    pub jitter: f64,
    /// Max out-of-plane bulge of each segment, mm.
    pub out_of_plane: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            scale: 1.0,
            pitch: 2.0,
            layout: TreeLayout::Full,
            radii: RadiusConfig::default(),
            jitter: 3.0,
            out_of_plane: 2.0,
        }
    }
}

impl TreeConfig {
    pub fn reduced(seed: u64) -> Self {
        Self { seed, layout: TreeLayout::Reduced, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let r = &self.radii;
        let positive = [
            ("scale", self.scale),
            ("pitch", self.pitch),
            ("radii.iliac", r.iliac),
            ("radii.aorta", r.aorta),
            ("radii.arch", r.arch),
            ("radii.ascending", r.ascending),
            ("radii.brachiocephalic", r.brachiocephalic),
            ("radii.subclavian", r.subclavian),
            ("radii.common_carotid", r.common_carotid),
            ("radii.internal_carotid", r.internal_carotid),
            ("radii.vertebral", r.vertebral),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(NavError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("jitter", self.jitter), ("out_of_plane", self.out_of_plane)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(NavError::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Where a child segment leaves its parent.
#[derive(Clone, Copy)]
enum Attach {
    Root,
    End(usize),
    /// Parent point nearest to this (unscaled) location.
    Near(usize, [f64; 2]),
}

struct Blueprint {
    label: BranchLabel,
    attach: Attach,
    /// In-plane (x, z) control path, unscaled mm; the first entry is the nominal start.
    path: Vec<[f64; 2]>,
    radius: f64,
    /// Branches widen near their origin.
    flare: bool,
}

fn arc_path(center: [f64; 2], r: f64, from_deg: f64, to_deg: f64) -> Vec<[f64; 2]> {
    let n = 90;
    (0..=n)
        .map(|i| {
            let t = (from_deg + (to_deg - from_deg) * i as f64 / n as f64).to_radians();
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

fn blueprints(layout: TreeLayout, r: &RadiusConfig) -> Vec<Blueprint> {
    use BranchLabel::*;
    let bp = |label, attach, path: Vec<[f64; 2]>, radius, flare| Blueprint { label, attach, path, radius, flare };
    match layout {
        TreeLayout::Reduced => vec![
            bp(CommonIliac, Attach::Root, vec![[25.0, -50.0], [0.0, 0.0]], r.iliac, false),
            bp(DescendingAorta, Attach::End(0), vec![[0.0, 0.0], [0.0, 120.0]], r.aorta, false),
            bp(LeftCommonCarotid, Attach::End(1), vec![[0.0, 120.0], [22.0, 160.0]], r.common_carotid, true),
            bp(LeftInternalCarotid, Attach::End(2), vec![[22.0, 160.0], [28.0, 230.0]], r.internal_carotid, false),
            bp(RightCommonCarotid, Attach::End(1), vec![[0.0, 120.0], [-22.0, 160.0]], r.common_carotid, true),
            bp(RightInternalCarotid, Attach::End(4), vec![[-22.0, 160.0], [-28.0, 230.0]], r.internal_carotid, false),
        ],
        TreeLayout::Full => {
            let arch = arc_path([-35.0, 200.0], 35.0, 0.0, 180.0);
            let at = |deg: f64| {
                let t = f64::to_radians(deg);
                [-35.0 + 35.0 * t.cos(), 200.0 + 35.0 * t.sin()]
            };
            vec![
                bp(CommonIliac, Attach::Root, vec![[30.0, -70.0], [0.0, 0.0]], r.iliac, false),
                bp(DescendingAorta, Attach::End(0), vec![[0.0, 0.0], [0.0, 200.0]], r.aorta, false),
                bp(AorticArch, Attach::End(1), arch, r.arch, false),
                bp(AscendingAorta, Attach::End(2), vec![[-70.0, 200.0], [-72.0, 140.0]], r.ascending, false),
                bp(LeftSubclavian, Attach::Near(2, at(40.0)), vec![at(40.0), [10.0, 260.0], [60.0, 280.0]], r.subclavian, true),
                bp(LeftCommonCarotid, Attach::Near(2, at(75.0)), vec![at(75.0), [-24.0, 330.0]], r.common_carotid, true),
                bp(LeftInternalCarotid, Attach::End(5), vec![[-24.0, 330.0], [-22.0, 420.0]], r.internal_carotid, false),
                bp(Brachiocephalic, Attach::Near(2, at(120.0)), vec![at(120.0), [-66.0, 270.0]], r.brachiocephalic, true),
                bp(RightCommonCarotid, Attach::End(7), vec![[-66.0, 270.0], [-60.0, 350.0]], r.common_carotid, false),
                bp(RightInternalCarotid, Attach::End(8), vec![[-60.0, 350.0], [-58.0, 440.0]], r.internal_carotid, false),
                bp(RightSubclavian, Attach::End(7), vec![[-66.0, 270.0], [-100.0, 282.0], [-130.0, 276.0]], r.subclavian, false),
                bp(LeftVertebral, Attach::Near(4, [10.0, 260.0]), vec![[10.0, 260.0], [6.0, 300.0], [3.0, 400.0]], r.vertebral, true),
            ]
        }
    }
}

/// Resamples a polyline at uniform arc spacing no larger than `pitch`, keeping both end points.
fn resample(path: &[Vec3<f64>], pitch: f64) -> Vec<Vec3<f64>> {
    let mut cum = vec![0.0];
    for w in path.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance(w[1]));
    }
    let total = *cum.last().unwrap();
    let n = (total / pitch).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(path[0]);
    let mut k = 0;
    for i in 1..n {
        let s = total * i as f64 / n as f64;
        while cum[k + 1] < s {
            k += 1;
        }
        let t = (s - cum[k]) / (cum[k + 1] - cum[k]);
        out.push(path[k].lerp(path[k + 1], t));
    }
    out.push(*path.last().unwrap());
    out
}

/// Generates a deterministic synthetic vessel tree.
pub fn build_synthetic_tree<T: Scalar>(config: &TreeConfig) -> Result<VesselTree<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bps = blueprints(config.layout, &config.radii);
    let mut built: Vec<(Vec<Vec3<f64>>, Vec<f64>, Option<PointRef>)> = Vec::with_capacity(bps.len());

    for bp in &bps {
        let s = config.scale;
        let mut ctrl: Vec<Vec3<f64>> = bp.path.iter().map(|p| Vec3::new(p[0] * s, 0.0, p[1] * s)).collect();
        // jitter the distal end; intermediate control points follow proportionally
        let j = config.jitter;
        let dx = if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 };
        let dz = if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 };
        let bulge = if config.out_of_plane > 0.0 {
            rng.random_range(-config.out_of_plane..=config.out_of_plane)
        } else {
            0.0
        };
        let m = ctrl.len() - 1;
        for (i, p) in ctrl.iter_mut().enumerate() {
            let u = i as f64 / m as f64;
            p.x += dx * u;
            p.z += dz * u;
        }

        let (start, parent) = match bp.attach {
            Attach::Root => (ctrl[0], None),
            Attach::End(pid) => {
                let pts = &built[pid].0;
                (*pts.last().unwrap(), Some(PointRef::new(pid, pts.len() - 1)))
            }
            Attach::Near(pid, loc) => {
                let want = Vec3::new(loc[0] * s, 0.0, loc[1] * s);
                let pts = &built[pid].0;
                let (idx, _) = pts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, (p.x - want.x).powi(2) + (p.z - want.z).powi(2)))
                    .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
                (pts[idx], Some(PointRef::new(pid, idx)))
            }
        };
        let shift = start - ctrl[0];
        for p in ctrl.iter_mut() {
            *p += shift;
        }
        ctrl[0] = start;

        // densify, bulge out of plane by arc fraction, then resample at the pitch
        let mut dense = vec![ctrl[0]];
        for w in ctrl.windows(2) {
            let k = (w[0].distance(w[1]) / 0.25).ceil().max(1.0) as usize;
            dense.extend((1..=k).map(|i| w[0].lerp(w[1], i as f64 / k as f64)));
        }
        let mut cum = vec![0.0];
        for w in dense.windows(2) {
            cum.push(cum.last().unwrap() + w[0].distance(w[1]));
        }
        let total = *cum.last().unwrap();
        for (p, s) in dense.iter_mut().zip(&cum).skip(1) {
            p.y += bulge * (std::f64::consts::PI * s / total).sin();
        }
        let mut pts = resample(&dense, config.pitch);
        pts[0] = start;
        let mut arc = 0.0;
        let mut radii = Vec::with_capacity(pts.len());
        for i in 0..pts.len() {
            if i > 0 {
                arc += pts[i].distance(pts[i - 1]);
            }
            let f = if bp.flare { 1.0 + 0.4 * (1.0 - arc / 12.0).max(0.0) } else { 1.0 };
            radii.push(bp.radius * f);
        }
        built.push((pts, radii, parent));
    }

    let segments = built
        .into_iter()
        .zip(&bps)
        .enumerate()
        .map(|(id, ((pts, radii, parent), bp))| VesselSegment {
            id: SegmentId(id),
            branch_label: bp.label,
            parent,
            centerline: pts.into_iter().map(|p| Vec3::new(T::lit(p.x), T::lit(p.y), T::lit(p.z))).collect(),
            radii: radii.into_iter().map(T::lit).collect(),
        })
        .collect();
    VesselTree::new(segments, SegmentId(0), ProjectionPlane::xz())
}

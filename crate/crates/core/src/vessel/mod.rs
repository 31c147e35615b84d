//! Synthetic vasculature as a rooted tree of centerline polylines with per-point lumen radii.
//!
//! The lumen is the union of spheres centred on the centerline points. All
//! nearest-point queries scan points in `(segment id, index)` order so ties
//! resolve to the lowest reference.

mod build;
mod targets;

pub use build::{build_synthetic_tree, RadiusConfig, TreeConfig, TreeLayout};
pub use targets::{sample_targets, Split, TargetSet, TARGETS_PER_BRANCH, TEST_TARGETS, TRAIN_TARGETS};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};
use crate::geometry::{Vec2, Vec3};
use crate::scalar::Scalar;

/// Slack on the inside-lumen predicate, mm.
pub const LUMEN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchLabel {
    CommonIliac,
    DescendingAorta,
    AorticArch,
    AscendingAorta,
    Brachiocephalic,
    RightSubclavian,
    LeftSubclavian,
    RightCommonCarotid,
    LeftCommonCarotid,
    RightInternalCarotid,
    LeftInternalCarotid,
    LeftVertebral,
    RightVertebral,
}

impl BranchLabel {
    /// Labels every full-anatomy tree must carry.
    pub const REQUIRED: [BranchLabel; 9] = [
        BranchLabel::CommonIliac,
        BranchLabel::DescendingAorta,
        BranchLabel::AorticArch,
        BranchLabel::Brachiocephalic,
        BranchLabel::RightCommonCarotid,
        BranchLabel::LeftCommonCarotid,
        BranchLabel::RightInternalCarotid,
        BranchLabel::LeftInternalCarotid,
        BranchLabel::LeftVertebral,
    ];
}

/// Target branch: right or left internal carotid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetBranch {
    RICA,
    LICA,
}

impl TargetBranch {
    pub const BOTH: [TargetBranch; 2] = [TargetBranch::RICA, TargetBranch::LICA];

    pub fn label(self) -> BranchLabel {
        match self {
            TargetBranch::RICA => BranchLabel::RightInternalCarotid,
            TargetBranch::LICA => BranchLabel::LeftInternalCarotid,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TargetBranch::RICA => "RICA",
            TargetBranch::LICA => "LICA",
        }
    }
}

impl std::fmt::Display for TargetBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TargetBranch {
    type Err = NavError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RICA" | "rica" => Ok(TargetBranch::RICA),
            "LICA" | "lica" => Ok(TargetBranch::LICA),
            other => Err(NavError::Config(format!("unknown branch {other:?}"))),
        }
    }
}

/// Reference to one centerline point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointRef {
    pub segment: SegmentId,
    pub index: usize,
}

impl PointRef {
    pub fn new(segment: usize, index: usize) -> Self {
        Self { segment: SegmentId(segment), index }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselSegment<T> {
    pub id: SegmentId,
    pub branch_label: BranchLabel,
    pub parent: Option<PointRef>,
    pub centerline: Vec<Vec3<T>>,
    pub radii: Vec<T>,
}

/// Fixed linear map from model space to the (x', z') tracking plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPlane<T> {
    pub rows: [[T; 3]; 2],
}

impl<T: Scalar> ProjectionPlane<T> {
    /// Keeps x and z, discards the out-of-plane y axis.
    pub fn xz() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { rows: [[o, z, z], [z, z, o]] }
    }

    pub fn project(&self, p: Vec3<T>) -> Vec2<T> {
        let r = &self.rows;
        Vec2::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
        )
    }

    /// Unit normal of the plane (the discarded direction).
    pub fn normal(&self) -> Vec3<T> {
        let a = Vec3::from(self.rows[0]);
        let b = Vec3::from(self.rows[1]);
        a.cross(b).normalized().unwrap_or_else(|| Vec3::new(T::zero(), T::one(), T::zero()))
    }
}

/// On-disk shape of a tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeFile<T> {
    pub segments: Vec<VesselSegment<T>>,
    pub root_segment_id: SegmentId,
    pub projection_plane: ProjectionPlane<T>,
}

#[derive(Debug, Clone, Copy)]
struct FlatPoint<T> {
    at: PointRef,
    p: Vec3<T>,
}

/// Immutable, validated vessel tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    try_from = "TreeFile<T>",
    into = "TreeFile<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + DeserializeOwned")
)]
pub struct VesselTree<T: Scalar> {
    segments: Vec<VesselSegment<T>>,
    root: SegmentId,
    plane: ProjectionPlane<T>,
    // cumulative arc length from the segment start, per point
    arc: Vec<Vec<T>>,
    flat: Vec<FlatPoint<T>>,
}

impl<T: Scalar> PartialEq for VesselTree<T> {
    fn eq(&self, o: &Self) -> bool {
        self.segments == o.segments && self.root == o.root && self.plane == o.plane
    }
}

impl<T: Scalar> From<VesselTree<T>> for TreeFile<T> {
    fn from(t: VesselTree<T>) -> Self {
        TreeFile { segments: t.segments, root_segment_id: t.root, projection_plane: t.plane }
    }
}

impl<T: Scalar> TryFrom<TreeFile<T>> for VesselTree<T> {
    type Error = NavError;
    fn try_from(f: TreeFile<T>) -> Result<Self> {
        VesselTree::new(f.segments, f.root_segment_id, f.projection_plane)
    }
}

impl<T: Scalar> VesselTree<T> {
    /// Validates the structural invariants and builds the query caches.
    pub fn new(
        segments: Vec<VesselSegment<T>>,
        root: SegmentId,
        plane: ProjectionPlane<T>,
    ) -> Result<Self> {
        let bad = |m: String| Err(NavError::Validation(m));
        if segments.is_empty() {
            return bad("tree has no segments".into());
        }
        for (pos, s) in segments.iter().enumerate() {
            if s.id.0 != pos {
                return bad(format!("segment at position {pos} has id {}", s.id.0));
            }
            if s.centerline.len() < 2 {
                return bad(format!("segment {pos} has fewer than 2 centerline points"));
            }
            if s.radii.len() != s.centerline.len() {
                return bad(format!("segment {pos}: radii and centerline lengths differ"));
            }
            if s.radii.iter().any(|r| !(*r > T::zero()) || !r.is_finite()) {
                return bad(format!("segment {pos}: non-positive radius"));
            }
            if s.centerline.iter().any(|p| !p.is_finite()) {
                return bad(format!("segment {pos}: non-finite point"));
            }
            if s.centerline.windows(2).any(|w| w[0] == w[1]) {
                return bad(format!("segment {pos}: repeated consecutive centerline point"));
            }
        }
        if root.0 >= segments.len() || segments[root.0].parent.is_some() {
            return bad("root segment missing or has a parent".into());
        }
        for s in &segments {
            if s.id == root {
                continue;
            }
            let Some(par) = s.parent else {
                return bad(format!("segment {} has no parent", s.id.0));
            };
            let Some(ps) = segments.get(par.segment.0) else {
                return bad(format!("segment {} parent out of range", s.id.0));
            };
            if par.index >= ps.centerline.len() {
                return bad(format!("segment {} attaches past parent end", s.id.0));
            }
            if ps.centerline[par.index] != s.centerline[0] {
                return bad(format!("segment {} does not start at its attachment point", s.id.0));
            }
            // every chain must reach the root without revisiting a segment
            let mut cur = s.id;
            let mut hops = 0;
            while cur != root {
                hops += 1;
                if hops > segments.len() {
                    return bad(format!("cycle through segment {}", s.id.0));
                }
                match segments[cur.0].parent {
                    Some(p) => cur = p.segment,
                    None => return bad(format!("segment {} not connected to root", cur.0)),
                }
            }
        }

        let arc = segments
            .iter()
            .map(|s| {
                let mut acc = T::zero();
                let mut out = Vec::with_capacity(s.centerline.len());
                out.push(acc);
                for w in s.centerline.windows(2) {
                    acc += w[0].distance(w[1]);
                    out.push(acc);
                }
                out
            })
            .collect();
        let flat = segments
            .iter()
            .flat_map(|s| {
                s.centerline
                    .iter()
                    .enumerate()
                    .map(move |(i, p)| FlatPoint { at: PointRef { segment: s.id, index: i }, p: *p })
            })
            .collect();
        Ok(Self { segments, root, plane, arc, flat })
    }

    pub fn segments(&self) -> &[VesselSegment<T>] {
        &self.segments
    }

    pub fn segment(&self, id: SegmentId) -> Option<&VesselSegment<T>> {
        self.segments.get(id.0)
    }

    pub fn root_segment_id(&self) -> SegmentId {
        self.root
    }

    pub fn projection_plane(&self) -> &ProjectionPlane<T> {
        &self.plane
    }

    pub fn point_count(&self) -> usize {
        self.flat.len()
    }

    /// Iterates every centerline point in `(segment, index)` order.
    pub fn points(&self) -> impl Iterator<Item = (PointRef, Vec3<T>)> + '_ {
        self.flat.iter().map(|f| (f.at, f.p))
    }

    pub fn contains_ref(&self, r: PointRef) -> bool {
        self.segment(r.segment).is_some_and(|s| r.index < s.centerline.len())
    }

    pub fn point(&self, r: PointRef) -> Option<Vec3<T>> {
        self.segment(r.segment).and_then(|s| s.centerline.get(r.index).copied())
    }

    pub fn radius(&self, r: PointRef) -> Option<T> {
        self.segment(r.segment).and_then(|s| s.radii.get(r.index).copied())
    }

    pub fn label_of(&self, r: PointRef) -> Option<BranchLabel> {
        self.segment(r.segment).map(|s| s.branch_label)
    }

    /// First segment carrying `label`.
    pub fn find_label(&self, label: BranchLabel) -> Option<&VesselSegment<T>> {
        self.segments.iter().find(|s| s.branch_label == label)
    }

    /// Checks that every anatomy label required for the full navigation task is present.
    pub fn check_required_labels(&self) -> Result<()> {
        for l in BranchLabel::REQUIRED {
            if self.find_label(l).is_none() {
                return Err(NavError::Validation(format!("missing branch label {l:?}")));
            }
        }
        Ok(())
    }

    /// Unit tangent at a centerline point, pointing away from the segment start.
    pub fn tangent(&self, r: PointRef) -> Option<Vec3<T>> {
        let s = self.segment(r.segment)?;
        let n = s.centerline.len();
        let (a, b) = if r.index + 1 < n { (r.index, r.index + 1) } else { (n - 2, n - 1) };
        (s.centerline[b] - s.centerline[a]).normalized()
    }

    /// Global nearest centerline point to `p` and its distance.
    pub fn nearest_centerline_point(&self, p: Vec3<T>) -> (PointRef, T) {
        let mut best = self.flat[0].at;
        let mut best_d2 = (self.flat[0].p - p).norm_sq();
        for f in &self.flat[1..] {
            let d2 = (f.p - p).norm_sq();
            if d2 < best_d2 {
                best_d2 = d2;
                best = f.at;
            }
        }
        (best, best_d2.sqrt())
    }

    pub fn project_to_plane(&self, p: Vec3<T>) -> Vec2<T> {
        self.plane.project(p)
    }

    pub fn inside_lumen(&self, p: Vec3<T>) -> bool {
        let (r, d) = self.nearest_centerline_point(p);
        d <= self.radius(r).expect("nearest ref valid") + T::lit(LUMEN_EPS)
    }

    /// Moves `p` radially onto the lumen boundary of its nearest centerline point if it lies outside.
    pub fn confine_to_lumen(&self, p: Vec3<T>) -> Vec3<T> {
        let (r, d) = self.nearest_centerline_point(p);
        let radius = self.radius(r).expect("nearest ref valid");
        if d <= radius + T::lit(LUMEN_EPS) {
            return p;
        }
        let c = self.point(r).expect("nearest ref valid");
        c + (p - c) * (radius / d)
    }

    fn chain(&self, r: PointRef) -> Vec<PointRef> {
        let mut out = vec![r];
        let mut cur = r;
        while let Some(par) = self.segments[cur.segment.0].parent {
            out.push(par);
            cur = par;
        }
        out
    }

    /// Along-centerline distance between two centerline points through the tree.
    pub fn pathlength_between(&self, a: PointRef, b: PointRef) -> T {
        let ca = self.chain(a);
        let cb = self.chain(b);
        for (ka, pa) in ca.iter().enumerate() {
            if let Some(kb) = cb.iter().position(|pb| pb.segment == pa.segment) {
                let pb = cb[kb];
                let up_a = ca[..ka]
                    .iter()
                    .fold(T::zero(), |acc, r| acc + self.arc[r.segment.0][r.index]);
                let up_b = cb[..kb]
                    .iter()
                    .fold(T::zero(), |acc, r| acc + self.arc[r.segment.0][r.index]);
                let arc = &self.arc[pa.segment.0];
                return up_a + up_b + (arc[pa.index] - arc[pb.index]).abs();
            }
        }
        unreachable!("validated trees share the root segment")
    }

    /// Snaps `tip` to its nearest centerline point and returns the along-centerline distance to `target`.
    pub fn pathlength(&self, tip: Vec3<T>, target: PointRef) -> T {
        let (snap, _) = self.nearest_centerline_point(tip);
        self.pathlength_between(snap, target)
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self>
    where
        T: DeserializeOwned,
    {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn straight_tree() -> VesselTree<f64> {
        let centerline: Vec<_> = (0..11).map(|i| Vec3::new(0.0, 0.0, 2.0 * i as f64)).collect();
        let radii = vec![4.0; 11];
        let root = VesselSegment {
            id: SegmentId(0),
            branch_label: BranchLabel::CommonIliac,
            parent: None,
            centerline,
            radii,
        };
        let side: Vec<_> = (0..6).map(|i| Vec3::new(2.0 * i as f64, 0.0, 10.0)).collect();
        let child = VesselSegment {
            id: SegmentId(1),
            branch_label: BranchLabel::LeftCommonCarotid,
            parent: Some(PointRef::new(0, 5)),
            centerline: side,
            radii: vec![2.0; 6],
        };
        VesselTree::new(vec![root, child], SegmentId(0), ProjectionPlane::xz()).unwrap()
    }

    #[test]
    fn nearest_identity_and_radial_offset() {
        let t = straight_tree();
        let p = Vec3::new(0.0, 0.0, 4.0);
        assert_eq!(t.nearest_centerline_point(p), (PointRef::new(0, 2), 0.0));
        let (r, d) = t.nearest_centerline_point(Vec3::new(0.0, 1.0, 4.0));
        assert_eq!(r, PointRef::new(0, 2));
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn junction_tie_breaks_to_lowest_segment() {
        let t = straight_tree();
        // the child's first point coincides with (0, 5)
        let (r, d) = t.nearest_centerline_point(Vec3::new(0.0, 0.0, 10.0));
        assert_eq!(r, PointRef::new(0, 5));
        assert_eq!(d, 0.0);
    }

    #[test]
    fn pathlength_straight_and_through_junction() {
        let t = straight_tree();
        let tip = Vec3::new(0.0, 0.0, 0.0);
        assert!((t.pathlength(tip, PointRef::new(0, 5)) - 10.0).abs() < 1e-12);
        assert!((t.pathlength(tip, PointRef::new(1, 3)) - 16.0).abs() < 1e-12);
        // from the distal root end back down and into the side branch
        assert!((t.pathlength_between(PointRef::new(0, 10), PointRef::new(1, 2)) - 14.0).abs() < 1e-12);
        assert_eq!(t.pathlength(Vec3::new(0.0, 0.0, 20.0), PointRef::new(0, 10)), 0.0);
    }

    #[test]
    fn confine_moves_outside_points_to_boundary() {
        let t = straight_tree();
        let c = Vec3::new(0.0, 0.0, 6.0);
        assert_eq!(t.confine_to_lumen(c), c);
        let out = t.confine_to_lumen(Vec3::new(0.0, 6.0, 6.0));
        assert!((out.distance(c) - 4.0).abs() < 1e-9);
        assert_eq!(t.confine_to_lumen(out), out);
    }

    #[test]
    fn rejects_detached_child() {
        let t = straight_tree();
        let mut f = TreeFile::from(t);
        f.segments[1].centerline[0].x = 0.5;
        assert!(matches!(VesselTree::try_from(f), Err(NavError::Validation(_))));
    }

    #[test]
    fn rejects_cycle() {
        let t = straight_tree();
        let mut f = TreeFile::from(t);
        f.segments[0].parent = Some(PointRef::new(1, 0));
        f.segments[0].centerline[0] = f.segments[1].centerline[0];
        assert!(VesselTree::try_from(f).is_err());
    }

    #[test]
    fn projection_kernel_is_out_of_plane_axis() {
        let plane = ProjectionPlane::<f64>::xz();
        assert_eq!(plane.project(Vec3::new(0.0, 1.0, 0.0)), Vec2::new(0.0, 0.0));
        assert_eq!(plane.normal(), Vec3::new(0.0, -1.0, 0.0));
    }
}

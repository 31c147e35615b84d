use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PointRef, TargetBranch, VesselTree};
use crate::error::{NavError, Result};
use crate::scalar::Scalar;

pub const TRAIN_TARGETS: usize = 20;
pub const TEST_TARGETS: usize = 10;
pub const TARGETS_PER_BRANCH: usize = TRAIN_TARGETS + TEST_TARGETS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Disjoint train/test target points on one internal carotid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSet {
    pub branch: TargetBranch,
    pub seed: u64,
    pub train: Vec<PointRef>,
    pub test: Vec<PointRef>,
}

impl TargetSet {
    pub fn split(&self, split: Split) -> &[PointRef] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn split_of(&self, target: PointRef) -> Option<Split> {
        if self.train.contains(&target) {
            Some(Split::Train)
        } else if self.test.contains(&target) {
            Some(Split::Test)
        } else {
            None
        }
    }
}

/// Draws 30 distinct centerline points of `branch`: the first 20 for training, the rest held out.
pub fn sample_targets<T: Scalar>(tree: &VesselTree<T>, branch: TargetBranch, seed: u64) -> Result<TargetSet> {
    let seg = tree
        .find_label(branch.label())
        .ok_or_else(|| NavError::Geometry(format!("branch {branch} absent from tree")))?;
    let n = seg.centerline.len();
    if n < TARGETS_PER_BRANCH {
        return Err(NavError::Geometry(format!(
            "branch {branch} has {n} centerline points, need {TARGETS_PER_BRANCH}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (picked, _) = idx.partial_shuffle(&mut rng, TARGETS_PER_BRANCH);
    let refs: Vec<PointRef> = picked.iter().map(|&i| PointRef { segment: seg.id, index: i }).collect();
    Ok(TargetSet {
        branch,
        seed,
        train: refs[..TRAIN_TARGETS].to_vec(),
        test: refs[TRAIN_TARGETS..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::vessel::{build_synthetic_tree, BranchLabel, ProjectionPlane, SegmentId, TreeConfig, VesselSegment};
    use std::collections::HashSet;

    #[test]
    fn twenty_train_ten_test_disjoint_on_branch() {
        let t: VesselTree<f64> = build_synthetic_tree(&TreeConfig::default()).unwrap();
        let s = sample_targets(&t, TargetBranch::RICA, 1).unwrap();
        assert_eq!(s.train.len(), 20);
        assert_eq!(s.test.len(), 10);
        let all: HashSet<_> = s.train.iter().chain(&s.test).collect();
        assert_eq!(all.len(), 30);
        assert!(all.iter().all(|r| t.label_of(**r) == Some(BranchLabel::RightInternalCarotid)));
        assert_eq!(s, sample_targets(&t, TargetBranch::RICA, 1).unwrap());
    }

    #[test]
    fn short_branch_is_geometry_error() {
        let stem = VesselSegment {
            id: SegmentId(0),
            branch_label: BranchLabel::CommonIliac,
            parent: None,
            centerline: vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 2.0)],
            radii: vec![4.0, 4.0],
        };
        let ica = VesselSegment {
            id: SegmentId(1),
            branch_label: BranchLabel::RightInternalCarotid,
            parent: Some(PointRef::new(0, 1)),
            centerline: (0..29).map(|i| Vec3::new(0.0, 0.0, 2.0 + 2.0 * i as f64)).collect(),
            radii: vec![3.0; 29],
        };
        let t = VesselTree::new(vec![stem, ica], SegmentId(0), ProjectionPlane::xz()).unwrap();
        assert!(matches!(sample_targets(&t, TargetBranch::RICA, 1), Err(NavError::Geometry(_))));
        assert!(matches!(sample_targets(&t, TargetBranch::LICA, 1), Err(NavError::Geometry(_))));
    }
}

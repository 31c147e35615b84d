//! Guidewire/catheter navigation in a synthetic vessel tree: a kinematic
//! two-device simulator, an episodic environment, maximum-entropy IRL reward
//! learning, reward shaping, and recurrent soft actor-critic training.
//!
//! Geometry, simulation and the differentiation substrate are generic over
//! [`Scalar`]; the learning stack runs in `f64` through the aliases below.

pub mod device;
pub mod diff;
pub mod env;
pub mod error;
pub mod geometry;
pub mod irl;
pub mod pilot;
pub mod rewards;
pub mod sac;
pub mod scalar;
pub mod stats;
pub mod vessel;

pub use error::{NavError, Result};
pub use geometry::{Vec2, Vec3};
pub use scalar::Scalar;
pub use vessel::{
    build_synthetic_tree, sample_targets, BranchLabel, PointRef, SegmentId, Split, TargetBranch, TargetSet,
    TreeConfig, TreeLayout, VesselSegment, VesselTree,
};

/// Vessel tree in double precision.
pub type Tree = VesselTree<f64>;

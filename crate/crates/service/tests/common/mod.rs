#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use navrl_core::{build_synthetic_tree, sample_targets, TargetBranch, TargetSet, Tree, TreeConfig};
use navrl_service::session::SessionContext;

pub fn reduced() -> (Arc<Tree>, Vec<TargetSet>) {
    let tree = Arc::new(build_synthetic_tree(&TreeConfig::reduced(3)).unwrap());
    let targets = TargetBranch::BOTH.iter().map(|b| sample_targets(&tree, *b, 3).unwrap()).collect();
    (tree, targets)
}

pub fn context() -> SessionContext {
    let (tree, targets) = reduced();
    SessionContext::new(tree, targets)
}

/// Writes the reduced tree and its targets; returns (tree path, targets path).
pub fn write_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let (tree, targets) = reduced();
    let tree_path = dir.join("tree.json");
    let targets_path = dir.join("targets.json");
    std::fs::write(&tree_path, tree.to_json().unwrap()).unwrap();
    std::fs::write(&targets_path, serde_json::to_string(&targets).unwrap()).unwrap();
    (tree_path, targets_path)
}

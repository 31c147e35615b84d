use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Matrix, Network, NetworkSpec};
use crate::error::{NavError, Result};
use crate::scalar::Scalar;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub spec: NetworkSpec,
    pub seed: u64,
    pub step: u64,
    pub params: Vec<ParamEntry>,
    /// Caller-defined metadata such as a branch tag.
    #[serde(default)]
    pub meta: serde_json::Value,
}

fn file_name(param: &str) -> String {
    format!("{}.f64", param.replace('/', "."))
}

/// Writes a manifest plus one little-endian f64 file per parameter into `dir`.
pub fn save_network<T: Scalar>(net: &Network<T>, dir: &Path, step: u64, meta: serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut params = Vec::with_capacity(net.store().len());
    for p in net.store().params() {
        let file = file_name(&p.name);
        let bytes: Vec<u8> = p.value.data().iter().flat_map(|v| v.as_f64().to_le_bytes()).collect();
        fs::write(dir.join(&file), bytes)?;
        params.push(ParamEntry { name: p.name.clone(), rows: p.value.rows(), cols: p.value.cols(), file });
    }
    let manifest = CheckpointManifest { spec: net.spec().clone(), seed: net.seed(), step, params, meta };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<CheckpointManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| NavError::Config(format!("checkpoint: cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Restores a network saved by [`save_network`].
pub fn load_network<T: Scalar>(dir: &Path) -> Result<(Network<T>, CheckpointManifest)> {
    let manifest = read_manifest(dir)?;
    let mut net = Network::new(manifest.spec.clone(), manifest.seed)?;
    if manifest.params.len() != net.store().len() {
        return Err(NavError::Shape(format!(
            "checkpoint has {} parameters, architecture needs {}",
            manifest.params.len(),
            net.store().len()
        )));
    }
    for entry in &manifest.params {
        let id = net
            .store()
            .find(&entry.name)
            .ok_or_else(|| NavError::Shape(format!("unknown parameter {}", entry.name)))?;
        let bytes = fs::read(dir.join(&entry.file))?;
        if bytes.len() != entry.rows * entry.cols * 8 {
            return Err(NavError::Shape(format!("{}: {} bytes for {}x{}", entry.file, bytes.len(), entry.rows, entry.cols)));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        net.store_mut().assign(id, Matrix::from_vec(entry.rows, entry.cols, data)?)?;
    }
    if !net.store().all_finite() {
        return Err(NavError::Numerical("checkpoint contains non-finite values".into()));
    }
    Ok((net, manifest))
}

//! Run manifests and artifact locations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use navrl_core::{NavError, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_DIR_ENV: &str = "NAVRL_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "navrl-data";

/// Everything needed to re-run a command: its resolved configuration, seeds and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Output files relative to the run directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: serde_json::to_value(config)?,
            seeds: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.into(), value);
        self
    }

    pub fn output(mut self, file: &str) -> Self {
        self.outputs.push(file.into());
        self
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| NavError::Config(format!("manifest: cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Artifact root: `$NAVRL_DATA_DIR`, else `navrl-data` in the working directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

/// `out` if given, else `<data dir>/<name>`.
pub fn output_dir(out: Option<&Path>, name: &str) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| data_dir().join(name))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path, field: &str) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| NavError::Config(format!("{field}: cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| NavError::Config(format!("{field}: invalid {}: {e}", path.display())))
}

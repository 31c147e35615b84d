//! Command-line interface.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use navrl_core::env::TrackingMode;
use navrl_core::rewards::RewardKind;
use navrl_core::TreeLayout;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "navrl", version, about = "Guidewire/catheter navigation: simulation, IRL and SAC training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic vessel tree.
    GenTree(GenTreeArgs),
    /// Draw train/test targets on both internal carotids.
    SampleTargets(SampleTargetsArgs),
    /// Serve the demonstration console and record sessions.
    Record(RecordArgs),
    /// Record scripted-pilot demonstrations without the console.
    SynthDemos(SynthDemosArgs),
    /// Fit per-branch reward models from recorded demonstrations.
    TrainIrl(TrainIrlArgs),
    /// Train a recurrent SAC agent.
    TrainSac(TrainSacArgs),
    /// Evaluate a checkpoint on the test targets.
    Evaluate(EvaluateArgs),
    /// Summarize evaluation CSVs of one or more runs.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutArg {
    Full,
    Reduced,
}

impl From<LayoutArg> for TreeLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Full => TreeLayout::Full,
            LayoutArg::Reduced => TreeLayout::Reduced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardArg {
    Dense,
    Irl,
    Shaped,
}

impl From<RewardArg> for RewardKind {
    fn from(r: RewardArg) -> Self {
        match r {
            RewardArg::Dense => RewardKind::Dense,
            RewardArg::Irl => RewardKind::Irl,
            RewardArg::Shaped => RewardKind::Shaped,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingArg {
    Single,
    Dual,
}

impl From<TrackingArg> for TrackingMode {
    fn from(t: TrackingArg) -> Self {
        match t {
            TrackingArg::Single => TrackingMode::Single,
            TrackingArg::Dual => TrackingMode::Dual,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenTreeArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = LayoutArg::Full)]
    pub layout: LayoutArg,
    /// JSON tree configuration; `--seed` and `--layout` override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleTargetsArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecordArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    /// Demonstration corpus directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8750")]
    pub addr: SocketAddr,
    /// Built console assets.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthDemosArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    /// Episodes per branch.
    #[arg(long, default_value_t = 10)]
    pub episodes: usize,
    /// Probability of replacing the pilot's action by a random one.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep only successful episodes.
    #[arg(long)]
    pub successes_only: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainIrlArgs {
    /// Corpus directory holding rica.jsonl and lica.jsonl.
    #[arg(long)]
    pub demos: PathBuf,
    /// JSON IRL configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub grid_levels: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainSacArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    /// JSON SAC configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub reward: Option<RewardArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Directory written by `train-irl`.
    #[arg(long)]
    pub irl_models: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub tracking: Option<TrackingArg>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub eval_interval: Option<u64>,
    #[arg(long)]
    pub eval_episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use only the first n train and test targets of each branch.
    #[arg(long)]
    pub targets_per_branch: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Agent checkpoint directory.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub eval_episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub targets_per_branch: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Run directories containing eval.csv.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

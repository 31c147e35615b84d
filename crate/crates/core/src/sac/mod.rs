//! Recurrent soft actor-critic: LSTM observation embedder shared by a
//! Gaussian policy and twin critics, episode replay, and deterministic
//! evaluation with the success, procedure-time and path-ratio metrics.

mod agent;
mod config;
mod eval;
mod replay;
mod train;

pub use agent::{
    act_step, AgentController, AgentGradients, AgentNetworks, Controller, LearnerSettings, LossWeights, SacLearner,
    TrainingBatch, UpdateStats,
};
pub use config::SacConfig;
pub use eval::{covered_fraction, evaluate, path_ratio, EpisodeEval, EvalReport, EVAL_CSV_HEADER};
pub use replay::{EpisodeRecord, ReplayBuffer, Subsequence};
pub use train::{train, EnvFactory, IntervalLog, TrainOutcome};

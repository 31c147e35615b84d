//! Reverse-mode differentiation over small dense matrices, with dense and
//! LSTM layers, a squashed Gaussian head, optimizers and checkpoints.

mod checkpoint;
mod gaussian;
mod gradcheck;
mod layers;
mod matrix;
mod optim;
mod params;
mod tape;

pub use checkpoint::{load_network, read_manifest, save_network, CheckpointManifest, ParamEntry, MANIFEST_FILE};
pub use gaussian::{
    deterministic_action, gaussian_head_sample, log_squash_jacobian, sample_squashed, sample_tape, squash,
    squashed_log_prob, squashed_log_prob_pre,
};
pub use gradcheck::{max_gradient_error, GRADCHECK_FLOOR};
pub use layers::{
    Activation, LayerSpec, LstmState, Network, NetworkSpec, TapeGaussian, TapeLstmState, LOG_STD_MAX, LOG_STD_MIN,
};
pub use matrix::Matrix;
pub use optim::{optimizer_step, AdamConfig, Direction, Optimizer, OptimizerKind};
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use tape::{Adjoints, StoreSlot, Tape, Var};

/// Name used for the recorded forward pass.
pub type GradientTape<'s, T> = Tape<'s, T>;

//! One-hidden-layer gradient networks: model, training, serialization, the
//! collection/training schedule and the prior-swap correction.

mod adam;
mod io;
mod mlp;
mod oracle;
mod schedule;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{softplus, Block, MlpGradientNet, NetSpec, Scaler, Scratch};
pub use oracle::{prior_swap, NetOracle, PriorSwapOracle};
pub use schedule::{
    run_nnghmc, run_training_schedule, NnghmcConfig, NnghmcRun, ScheduleCheck, ScheduleOutcome, TrainingSchedule,
};
pub use train::{backprop_gradient, batch_loss, finite_difference_weights, train, Grads, TrainConfig, TrainReport};

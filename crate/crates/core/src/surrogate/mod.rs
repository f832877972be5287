//! Message-passing surrogate trained through the differentiable OSC pipeline.

pub mod data;
pub mod loss;
pub mod mpnn;
pub mod tape;
pub mod train;

pub use data::{Boundary, Dataset, Episode, ToyConfig, ToyKind};
pub use loss::{composite_loss, LossContext, LossValues, LossVars};
pub use mpnn::{mpnn_step, rollout, GridGraph, MpnnConfig, MpnnParams};
pub use tape::{Gradients, LinearSolver, Tape, Var};
pub use train::{metrics_csv, train, Checkpoint, EpochMetrics, LossRoot, TrainConfig, TrainOutcome, Variant};

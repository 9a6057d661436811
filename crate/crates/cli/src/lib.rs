//! Batch experiment driver: config loading, dataset generation, training,
//! held-out evaluation, bound reports and sweeps.

pub mod commands;
pub mod config;
pub mod failure;

pub use commands::{bounds, evaluate, generate, pipeline, sweep, train, ExperimentReport};
pub use config::{ExperimentConfig, Seeds, SweepParameter, SweepSpec};
pub use failure::{Failure, Outcome};

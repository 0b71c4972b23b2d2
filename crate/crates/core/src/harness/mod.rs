//! Experiment orchestration: configuration, training loops, checkpoints,
//! two-terrain evaluation, statistics, reports and the command line.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod eval;
pub mod plot;
pub mod stats;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, Progress, FORMAT_VERSION};
pub use config::{Algorithm, EnvConfig, RunConfig, TrainConfig};
pub use eval::{evaluate, transfer_experiment, EvalReport, TransferReport, DEFAULT_TRIALS};
pub use plot::plot_metrics;
pub use stats::{summarize, Summary};
pub use train::{train, train_with_env, TrainOutcome};

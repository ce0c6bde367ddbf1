//! Command implementations behind the `mp2` binary: training, evaluation,
//! hyperparameter grids and multi-seed comparison tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod reference;
pub mod runner;

pub use config::{RunConfig, TrainSettings, DATA_DIR_ENV};
pub use error::CliError;

//! File formats, experiment driver and command-line front end for
//! cover-source selection.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod parallel;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiment::{run_experiment, RunOptions, Summary};

//! Experiment configuration, figure recipes and the `swnoc` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod recipes;

pub use config::ExperimentConfig;
pub use error::HarnessError;

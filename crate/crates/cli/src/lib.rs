//! Experiment runner for pullback geometry: configs, train → snapshot →
//! geometry pipelines, CSV export and PNG rendering.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod pipeline;
pub mod render;

pub use config::{ExperimentConfig, Task};
pub use error::{CliError, CliResult};
pub use experiments::run_experiment;

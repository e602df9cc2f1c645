//! Experiment harness on top of `ultrafast-core`: flat key-value
//! configuration, CSV/summary output and the four `ufde` experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{Failure, Outcome};
pub use config::ExperimentConfig;

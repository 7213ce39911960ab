//! Experiment runner on top of `sgld-core`: parallel ensembles, coupled-pair
//! runs, the bias and tail experiments, configuration, and CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bias;
pub mod commands;
pub mod config;
pub mod coupled;
pub mod ensemble;
mod error;
pub mod model;
pub mod output;
pub mod stats;
pub mod tails;

pub use error::{Error, Result};
pub use sgld_core as core;

//! Experiment runner for the multiple-model delay estimators: simulated
//! patients, CSV replay, and RMSE reporting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod resample;
pub mod scenario;

pub use config::{Algo, ExperimentConfig, Mode};
pub use error::{HarnessError, Result};
pub use metrics::{compute_rmse, MetricsReport};

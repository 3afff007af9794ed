//! Monte-Carlo harness for the estimator-averaging studies.
//!
//! A run is described by an [`ExperimentConfig`]; [`run_experiment`] replays
//! it replicate by replicate and reduces the records to a [`SummaryTable`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod summary;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig, Study};
pub use experiment::{run_experiment, ReplicationRecord, RunError, RunOutput};
pub use summary::{SummaryRow, SummaryTable};

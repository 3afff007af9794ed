//! Weighted averaging of estimators.
//!
//! A collection `T` of estimators of the parameters `θ ∈ ℝᵈ` is combined as
//! `θ̂ = λᵀT` with `λᵀJ = I`. The weights minimize an estimate of the risk
//! `tr(λᵀΣλ)` over one of four constraint sets. The crate also ships the
//! estimator banks, samplers and MSE-matrix estimators used by the
//! simulation studies in the `estavg` harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod boolean;
pub mod distributions;
pub mod divergence;
pub mod error;
pub mod group;
pub mod location;
pub mod matrix;
pub mod mse;
pub mod quantile;
pub mod rng;
pub mod weibull;

pub use averaging::{
    average, combine, component_risk, confidence_intervals, risk_trace, AveragingResult, ConstraintSet,
    EstimatorVector, Interval,
};
pub use distributions::Distribution;
pub use error::{Error, Result};
pub use group::GroupStructure;
pub use matrix::{MseMatrix, WeightMatrix};
pub use mse::{EstimatorBank, ModelSimulator};
pub use rng::RngStream;

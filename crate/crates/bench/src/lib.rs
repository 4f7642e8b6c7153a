//! Simulation harness for distributed principal-eigenspace estimation.
//!
//! [`data`] generates the synthetic sites, [`experiment`] runs and scores
//! the estimators over replicates, and [`report`] writes result tables.

pub mod data;
pub mod experiment;
pub mod report;

pub use experiment::{run_experiment, run_timing, ExperimentConfig, ExperimentOutcome, ResultRow, Scenario, TimingRow};

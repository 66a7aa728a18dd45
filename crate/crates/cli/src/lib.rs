//! Experiment runner around `pansrr-core`: simulated frame generation,
//! baselines, the end-to-end pipeline and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod simulate;
pub mod truth;

pub use config::{Baseline, ExperimentConfig, Mode, SolverChoice};
pub use pipeline::{run_pipeline, RunSummary, Stage};

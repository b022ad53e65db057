//! Monte Carlo driver for the aggregated-correlation estimators.
//!
//! A run is described by an [`ExperimentConfig`]: a layout, a set of intra
//! models, a grid of noise scenarios and the estimators to evaluate.
//! [`run_experiment`] replicates every scenario and compares the estimates
//! with their limits; [`write_outputs`] turns the summaries into files.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{select_scenarios, ExperimentConfig, ScenarioSection, DEFAULT_CONFIG};
pub use experiment::{
    data_seed, limit_table, run_experiment, run_experiment_with, sampler_seed, EstimateSummary, FactorCache, RepOutcome,
};
pub use output::{box_stats, estimates_csv, summary_csv, write_outputs, BoxStats};

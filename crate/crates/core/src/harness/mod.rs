//! Seeded batch experiments: configuration, the weekly simulation loop,
//! aggregation across runs and CSV/JSON output.

mod config;
mod output;
mod sim;
mod stats;

pub use config::{AlphaSpec, Environment, ExperimentConfig, RewardKind};
pub use output::{
    emit_outputs, format_decimal, render_csv, FinalWeek, OutputPaths, RunSummary, Summary, CSV_FILE, CSV_HEADER,
    SUMMARY_FILE,
};
pub use sim::{run_experiment, run_experiment_serial, run_seed, run_simulation, RunResult};
pub use stats::{aggregate, convergence_week, mean_optimum, AggregateStats};

use crate::error::Result;

/// Run every configured run and aggregate against the mean per-run optimum.
pub fn run_and_aggregate(cfg: &ExperimentConfig) -> Result<(Vec<RunResult>, AggregateStats)> {
    let results = run_experiment(cfg)?;
    let stats = aggregate(&results, mean_optimum(&results), cfg.convergence_fraction)?;
    Ok((results, stats))
}

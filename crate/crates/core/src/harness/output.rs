use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sim::RunResult;
use super::stats::AggregateStats;
use crate::bar::AttendanceProfile;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "week,mean_world_reward,std_world_reward,min_world_reward,max_world_reward";
pub const CSV_FILE: &str = "world_reward.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Plain decimal notation with at least 12 significant digits.
pub fn format_decimal(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.11}", 0.0);
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (11 - magnitude).clamp(0, 340) as usize;
    format!("{v:.decimals$}")
}

pub fn render_csv(stats: &AggregateStats) -> String {
    let mut out = String::with_capacity(64 * (stats.weeks() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for w in 0..stats.weeks() {
        let _ = writeln!(
            out,
            "{w},{},{},{},{}",
            format_decimal(stats.mean[w]),
            format_decimal(stats.std[w]),
            format_decimal(stats.min[w]),
            format_decimal(stats.max[w]),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalWeek {
    pub week: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_index: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_attendance: Option<AttendanceProfile>,
    /// Leader-follower only: guessed effect set of each leader, in leader order.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_effect_sets: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub macrolearning_fired: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub runs: usize,
    pub weeks: usize,
    pub optimum: f64,
    pub convergence_fraction: f64,
    pub convergence_week: Option<usize>,
    pub final_week: Option<FinalWeek>,
    pub per_run: Vec<RunSummary>,
}

impl Summary {
    pub fn new(stats: &AggregateStats, cfg: &ExperimentConfig, results: &[RunResult]) -> Self {
        let final_week = stats.weeks().checked_sub(1).map(|w| FinalWeek {
            week: w,
            mean: stats.mean[w],
            std: stats.std[w],
            min: stats.min[w],
            max: stats.max[w],
        });
        Summary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            seed: cfg.seed,
            runs: stats.runs,
            weeks: stats.weeks(),
            optimum: stats.optimum,
            convergence_fraction: stats.threshold_fraction,
            convergence_week: stats.convergence_week,
            final_week,
            per_run: results
                .iter()
                .map(|r| RunSummary {
                    run_index: r.run_index,
                    final_attendance: r.final_attendance.clone(),
                    final_effect_sets: r.final_effect_sets.clone(),
                    macrolearning_fired: r.macrolearning_fired,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `world_reward.csv` and `summary.json` into `dir`, creating it if
/// needed.
pub fn emit_outputs(
    stats: &AggregateStats,
    cfg: &ExperimentConfig,
    results: &[RunResult],
    dir: &Path,
) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let csv = dir.join(CSV_FILE);
    write(&csv, &render_csv(stats))?;
    let summary = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&Summary::new(stats, cfg, results)).map_err(|e| Error::Encode {
        what: "summary",
        reason: e.to_string(),
    })?;
    write(&summary, &(json + "\n"))?;
    Ok(OutputPaths { csv, summary })
}

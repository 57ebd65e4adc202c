use serde::{Deserialize, Serialize};

use super::sim::RunResult;
use crate::error::{Error, Result};

/// Per-week statistics of world reward across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub runs: usize,
    pub mean: Vec<f64>,
    /// Population standard deviation (zero for a single run).
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub optimum: f64,
    pub threshold_fraction: f64,
    /// First week from which the mean stays at or above
    /// `threshold_fraction * optimum` until the end.
    pub convergence_week: Option<usize>,
}

impl AggregateStats {
    pub fn weeks(&self) -> usize {
        self.mean.len()
    }
}

fn ordered_sum(values: &mut [f64]) -> f64 {
    // fixed summation order makes the statistics invariant to run order
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

pub fn aggregate(results: &[RunResult], optimum: f64, threshold_fraction: f64) -> Result<AggregateStats> {
    let first = results.first().ok_or_else(|| Error::domain("cannot aggregate zero runs"))?;
    let weeks = first.world_reward.len();
    if let Some(r) = results.iter().find(|r| r.world_reward.len() != weeks) {
        return Err(Error::Domain(format!(
            "run {} has {} weeks, expected {weeks}",
            r.run_index,
            r.world_reward.len()
        )));
    }
    let n = results.len() as f64;
    let mut mean = Vec::with_capacity(weeks);
    let mut std = Vec::with_capacity(weeks);
    let mut min = Vec::with_capacity(weeks);
    let mut max = Vec::with_capacity(weeks);
    let mut column = vec![0.0; results.len()];
    for w in 0..weeks {
        for (slot, r) in column.iter_mut().zip(results) {
            *slot = r.world_reward[w];
        }
        let m = ordered_sum(&mut column) / n;
        let mut sq: Vec<f64> = column.iter().map(|v| (v - m) * (v - m)).collect();
        std.push((ordered_sum(&mut sq) / n).sqrt());
        // column is sorted by ordered_sum
        min.push(column[0]);
        max.push(column[column.len() - 1]);
        mean.push(m.clamp(column[0], column[column.len() - 1]));
    }
    let threshold = threshold_fraction * optimum;
    let convergence_week = convergence_week(&mean, threshold);
    Ok(AggregateStats {
        runs: results.len(),
        mean,
        std,
        min,
        max,
        optimum,
        threshold_fraction,
        convergence_week,
    })
}

/// Smallest `w` with `series[t] >= threshold` for every `t >= w`.
pub fn convergence_week(series: &[f64], threshold: f64) -> Option<usize> {
    let mut week = None;
    for (t, &v) in series.iter().enumerate().rev() {
        if v >= threshold {
            week = Some(t);
        } else {
            break;
        }
    }
    week
}

/// Mean of the per-run optima; they coincide unless the reward tensor is
/// drawn per run.
pub fn mean_optimum(results: &[RunResult]) -> f64 {
    let mut v: Vec<f64> = results.iter().map(|r| r.optimum).collect();
    ordered_sum(&mut v) / results.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(i: usize, series: Vec<f64>) -> RunResult {
        RunResult {
            run_index: i,
            world_reward: series,
            optimum: 1.0,
            final_attendance: None,
            final_effect_sets: None,
            macrolearning_fired: None,
        }
    }

    #[test]
    fn single_run_has_zero_spread() {
        let s = aggregate(&[run(0, vec![1.0, 2.0, 3.0])], 3.0, 0.5).unwrap();
        assert_eq!(s.mean, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.std, vec![0.0; 3]);
        assert_eq!(s.min, s.mean);
        assert_eq!(s.max, s.mean);
    }

    #[test]
    fn two_constant_runs_average() {
        let s = aggregate(&[run(0, vec![2.0; 4]), run(1, vec![5.0; 4])], 10.0, 0.9).unwrap();
        assert_eq!(s.mean, vec![3.5; 4]);
        assert_eq!(s.std, vec![1.5; 4]);
        assert_eq!(s.convergence_week, None);
    }

    #[test]
    fn convergence_is_the_final_crossing() {
        assert_eq!(convergence_week(&[0.0, 0.2, 0.96, 0.97, 1.0], 0.95), Some(2));
        assert_eq!(convergence_week(&[0.0, 0.96, 0.5, 0.97, 1.0], 0.95), Some(3));
        assert_eq!(convergence_week(&[0.0, 0.1], 0.95), None);
        assert_eq!(convergence_week(&[], 0.95), None);
    }

    #[test]
    fn rejects_empty_and_ragged_input() {
        assert!(aggregate(&[], 1.0, 0.9).is_err());
        assert!(aggregate(&[run(0, vec![1.0]), run(1, vec![1.0, 2.0])], 1.0, 0.9).is_err());
    }
}

//! Run-time correction of guessed effect sets.
//!
//! The macrolearner watches which nights agents attend, estimates pairwise
//! Pearson correlations of those night series, and gives each agent a guessed
//! effect set made of itself and its two most correlated peers.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::leader_follower::GuessedEffectSets;
use crate::worldline::WeekState;

/// Attended night indices, one row per observed week.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttendanceHistory {
    agents: usize,
    rows: Vec<Vec<usize>>,
}

impl AttendanceHistory {
    pub fn new(agents: usize) -> Self {
        AttendanceHistory {
            agents,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<usize>>) -> Result<Self> {
        let agents = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != agents) {
            return Err(Error::domain("history rows differ in length"));
        }
        Ok(AttendanceHistory { agents, rows })
    }

    /// Append one week. Clamped agents are not expected here.
    pub fn record(&mut self, attended: &WeekState) -> Result<()> {
        if attended.len() != self.agents {
            return Err(Error::Domain(format!(
                "week has {} agents, history tracks {}",
                attended.len(),
                self.agents
            )));
        }
        let row = attended
            .indices()
            .ok_or_else(|| Error::domain("cannot record a week with clamped agents"))?;
        self.rows.push(row);
        Ok(())
    }

    pub fn weeks(&self) -> usize {
        self.rows.len()
    }

    pub fn agents(&self) -> usize {
        self.agents
    }
}

/// Symmetric `N x N` correlation estimates with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::domain("correlation matrix must be square"));
        }
        Ok(CorrelationMatrix { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Pearson correlation of every pair of attended-night series. A series with
/// zero variance correlates 0 with everything else.
pub fn estimate_correlations(history: &AttendanceHistory) -> Result<CorrelationMatrix> {
    let weeks = history.weeks();
    if weeks < 2 {
        return Err(Error::Domain(format!("need at least 2 observed weeks, have {weeks}")));
    }
    let n = history.agents();
    let t = weeks as f64;
    // centred series, agent-major
    let mut centred = vec![0.0; n * weeks];
    let mut norms = vec![0.0; n];
    for a in 0..n {
        let mean = history.rows.iter().map(|r| r[a] as f64).sum::<f64>() / t;
        let series = &mut centred[a * weeks..(a + 1) * weeks];
        for (dst, row) in series.iter_mut().zip(&history.rows) {
            *dst = row[a] as f64 - mean;
        }
        norms[a] = series.iter().map(|v| v * v).sum::<f64>();
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let r = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let si = &centred[i * weeks..(i + 1) * weeks];
                let sj = &centred[j * weeks..(j + 1) * weeks];
                let cov: f64 = si.iter().zip(sj).map(|(x, y)| x * y).sum();
                (cov / (norms[i] * norms[j]).sqrt()).clamp(-1.0, 1.0)
            };
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
    }
    Ok(CorrelationMatrix { n, values })
}

/// Each agent's new set is itself plus the two other agents it correlates with
/// most, ties going to the lower index.
pub fn reassign_effect_sets(corr: &CorrelationMatrix) -> Result<GuessedEffectSets> {
    let n = corr.len();
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 agents to pick two peers, have {n}")));
    }
    let sets = (0..n)
        .map(|a| {
            let mut peers: Vec<usize> = (0..n).filter(|&j| j != a).collect();
            // stable sort keeps index order among equal correlations
            peers.sort_by(|&x, &y| corr.get(a, y).total_cmp(&corr.get(a, x)));
            let mut s = BTreeSet::from([a]);
            s.extend(peers.into_iter().take(2));
            s
        })
        .collect();
    GuessedEffectSets::from_sets(sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_correlate_fully() {
        let rows = vec![vec![0, 0, 3], vec![2, 2, 1], vec![5, 5, 1], vec![1, 1, 0]];
        let c = estimate_correlations(&AttendanceHistory::from_rows(rows).unwrap()).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 0), 1.0);
        assert_eq!(c.get(2, 2), 1.0);
    }

    #[test]
    fn constant_series_correlate_zero() {
        let rows = vec![vec![4, 0], vec![4, 1], vec![4, 6]];
        let c = estimate_correlations(&AttendanceHistory::from_rows(rows).unwrap()).unwrap();
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(0, 0), 1.0);
    }

    #[test]
    fn short_history_is_rejected() {
        let h = AttendanceHistory::from_rows(vec![vec![0, 1, 2]]).unwrap();
        assert!(estimate_correlations(&h).is_err());
    }

    #[test]
    fn zero_matrix_ties_break_low() {
        let mut v = vec![0.0; 25];
        for i in 0..5 {
            v[i * 5 + i] = 1.0;
        }
        let sets = reassign_effect_sets(&CorrelationMatrix::from_values(5, v).unwrap()).unwrap();
        assert_eq!(sets.get(0), &BTreeSet::from([0, 1, 2]));
        assert_eq!(sets.get(1), &BTreeSet::from([0, 1, 2]));
        assert_eq!(sets.get(4), &BTreeSet::from([0, 1, 4]));
        assert!(reassign_effect_sets(&CorrelationMatrix::from_values(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap()).is_err());
    }
}

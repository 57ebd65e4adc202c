//! The multi-night bar problem.
//!
//! `N` agents each pick one of `K` nights per week. Night `k` contributes
//! `gamma_k(x_k) = alpha_k * x_k * exp(-x_k / c)` to the world reward, where
//! `x_k` is its attendance; `gamma_k` peaks at `x_k = c`. Three personal
//! rewards are provided: uniform division (UD), the global reward (G) and the
//! Wonderful Life reward (WL), the latter being the agent's marginal
//! contribution to its own night.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::worldline::{ClampSet, Embedding, WeekState, WorldUtility, Worldline};

/// Named weightings of the nights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPreset {
    /// Every night weighted 1.
    Uniform,
    /// All weight (`K`) on night 3; zero elsewhere.
    SingleNight,
}

impl AlphaPreset {
    pub fn weights(self, nights: usize) -> Result<Vec<f64>> {
        match self {
            AlphaPreset::Uniform => Ok(vec![1.0; nights]),
            AlphaPreset::SingleNight => {
                if nights < 4 {
                    return Err(Error::config(
                        "alpha",
                        format!("single_night weights night 3 but only {nights} nights exist"),
                    ));
                }
                let mut a = vec![0.0; nights];
                a[3] = nights as f64;
                Ok(a)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarConfig {
    pub agents: usize,
    pub nights: usize,
    pub capacity: f64,
    pub alpha: Vec<f64>,
}

impl BarConfig {
    pub fn new(agents: usize, nights: usize, capacity: f64, alpha: Vec<f64>) -> Result<Self> {
        let cfg = BarConfig {
            agents,
            nights,
            capacity,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 168 agents, 7 nights, capacity 6.
    pub fn standard(preset: AlphaPreset) -> Self {
        BarConfig {
            agents: 168,
            nights: 7,
            capacity: 6.0,
            alpha: preset.weights(7).expect("7 nights"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::config("agents", "must be positive"));
        }
        if self.nights == 0 {
            return Err(Error::config("nights", "must be positive"));
        }
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err(Error::config("capacity", format!("must be > 0, got {}", self.capacity)));
        }
        if self.alpha.len() != self.nights {
            return Err(Error::config(
                "alpha",
                format!("expected {} weights, got {}", self.nights, self.alpha.len()),
            ));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::config("alpha", "weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Attendance count per night.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttendanceProfile(pub Vec<usize>);

impl AttendanceProfile {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Clamped nodes attend no night.
pub fn attendance(state: &WeekState) -> AttendanceProfile {
    let mut x = vec![0usize; state.nights()];
    for c in state.slots().iter().flatten() {
        x[c.index()] += 1;
    }
    AttendanceProfile(x)
}

#[inline]
pub fn gamma(y: f64, alpha_k: f64, capacity: f64) -> f64 {
    alpha_k * y * (-y / capacity).exp()
}

/// Sum of per-night terms in ascending order, so that profiles that are
/// permutations of each other under equal weights give bit-identical totals.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

pub fn world_reward_of_profile(profile: &AttendanceProfile, cfg: &BarConfig) -> f64 {
    sorted_sum(
        profile
            .0
            .iter()
            .zip(&cfg.alpha)
            .map(|(&x, &a)| gamma(x as f64, a, cfg.capacity))
            .collect(),
    )
}

/// `R = sum_k gamma_k(x_k)`.
pub fn world_reward(state: &WeekState, cfg: &BarConfig) -> f64 {
    world_reward_of_profile(&attendance(state), cfg)
}

/// `R` on the real-valued extension: `x_k` is the `k`-th column sum.
pub fn world_reward_embedded(embedding: &Embedding, cfg: &BarConfig) -> f64 {
    sorted_sum(
        embedding
            .column_sums()
            .into_iter()
            .zip(&cfg.alpha)
            .map(|(x, &a)| gamma(x, a, cfg.capacity))
            .collect(),
    )
}

/// WL on the real-valued extension: `R(e) - R(e with the node's row zeroed)`.
pub fn reward_wl_embedded(node: usize, embedding: &Embedding, cfg: &BarConfig) -> f64 {
    let mut clamped = embedding.clone();
    clamped.clear_row(node);
    world_reward_embedded(embedding, cfg) - world_reward_embedded(&clamped, cfg)
}

fn attended_night(node: usize, state: &WeekState) -> Result<usize> {
    if node >= state.len() {
        return Err(Error::Index {
            what: "node",
            index: node,
            bound: state.len(),
        });
    }
    state
        .choice(node)
        .map(|c| c.index())
        .ok_or_else(|| Error::Domain(format!("node {node} is clamped and attends no night")))
}

/// Uniform division: `gamma_d(x_d) / x_d = alpha_d * exp(-x_d / c)`.
pub fn reward_ud(node: usize, state: &WeekState, cfg: &BarConfig) -> Result<f64> {
    let d = attended_night(node, state)?;
    let x = attendance(state).0[d];
    Ok(ud_from_attendance(x, cfg.alpha[d], cfg.capacity))
}

#[inline]
pub(crate) fn ud_from_attendance(x: usize, alpha: f64, capacity: f64) -> f64 {
    alpha * (-(x as f64) / capacity).exp()
}

/// The team-game reward: every node receives `R`.
pub fn reward_g(node: usize, state: &WeekState, cfg: &BarConfig) -> Result<f64> {
    if node >= state.len() {
        return Err(Error::Index {
            what: "node",
            index: node,
            bound: state.len(),
        });
    }
    Ok(world_reward(state, cfg))
}

/// Wonderful Life reward with the node's own state as its effect set:
/// `gamma_d(x_d) - gamma_d(x_d - 1)`. Only the attendance of the node's own
/// night is needed.
pub fn reward_wl(node: usize, state: &WeekState, cfg: &BarConfig) -> Result<f64> {
    let d = attended_night(node, state)?;
    let x = attendance(state).0[d];
    Ok(wl_from_attendance(x, cfg.alpha[d], cfg.capacity))
}

#[inline]
pub(crate) fn wl_from_attendance(x: usize, alpha: f64, capacity: f64) -> f64 {
    debug_assert!(x >= 1);
    gamma(x as f64, alpha, capacity) - gamma((x - 1) as f64, alpha, capacity)
}

/// The same reward computed by clamping: `R(s) - R(CL_node(s))`.
pub fn reward_wl_clamped(node: usize, state: &WeekState, cfg: &BarConfig) -> Result<f64> {
    attended_night(node, state)?;
    let g = WorldUtility::new(|w: &WeekState| world_reward(w, cfg));
    let line = Worldline::single(state.clone());
    crate::worldline::wlu(&g, &ClampSet::nodes_in_week([node], 0), &line)
}

/// Best achievable world reward over all ways of splitting the agents across
/// nights, found by exact dynamic programming over the attendance profile.
pub fn optimum(cfg: &BarConfig) -> (f64, AttendanceProfile) {
    let n = cfg.agents;
    let k = cfg.nights;
    // best[j][m]: best reward placing m agents on nights j..k
    let mut best = vec![vec![f64::NEG_INFINITY; n + 1]; k + 1];
    let mut pick = vec![vec![0usize; n + 1]; k];
    best[k][0] = 0.0;
    for j in (0..k).rev() {
        for m in 0..=n {
            for x in 0..=m {
                let rest = best[j + 1][m - x];
                if rest == f64::NEG_INFINITY {
                    continue;
                }
                let v = gamma(x as f64, cfg.alpha[j], cfg.capacity) + rest;
                if v > best[j][m] {
                    best[j][m] = v;
                    pick[j][m] = x;
                }
            }
        }
    }
    let mut profile = Vec::with_capacity(k);
    let mut m = n;
    for row in &pick {
        profile.push(row[m]);
        m -= row[m];
    }
    let profile = AttendanceProfile(profile);
    (world_reward_of_profile(&profile, cfg), profile)
}

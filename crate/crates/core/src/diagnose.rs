//! Ready-made single-week utilities for both environments and an exhaustive
//! diagnostic report over small instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bar::{self, BarConfig};
use crate::diagnostics::{self, CounterfactualMeasure, Utility};
use crate::error::{Error, Result};
use crate::harness::{Environment, ExperimentConfig, RewardKind};
use crate::leader_follower::{self as lf, GuessedEffectSets, LfConfig, RewardTensor, TensorKind};
use crate::worldline::{Embedding, WeekState};

/// A boxed single-week utility.
pub type BoxedUtility<'a> = Box<dyn Fn(usize, &WeekState) -> f64 + Sync + 'a>;

/// Bar world reward `R`, ignoring the node argument.
pub fn bar_world<'a>(cfg: &'a BarConfig) -> BoxedUtility<'a> {
    Box::new(move |_, s| bar::world_reward(s, cfg))
}

/// Bar personal reward of the given kind. WL is computed by clamping the
/// node's own state.
pub fn bar_personal<'a>(kind: RewardKind, cfg: &'a BarConfig) -> BoxedUtility<'a> {
    match kind {
        RewardKind::UniformDivision => Box::new(move |n, s| bar::reward_ud(n, s, cfg).expect("unclamped node")),
        RewardKind::Global => Box::new(move |n, s| bar::reward_g(n, s, cfg).expect("node in range")),
        RewardKind::WonderfulLife => Box::new(move |n, s| bar::reward_wl_clamped(n, s, cfg).expect("unclamped node")),
    }
}

/// Leader-follower world reward as a function of picks: dynamics first.
pub fn lf_world<'a>(tensor: &'a RewardTensor, cfg: &'a LfConfig) -> BoxedUtility<'a> {
    Box::new(move |_, picks| {
        let attended = lf::apply_dynamics(picks, cfg).expect("sized state");
        lf::world_reward_lf(&attended, tensor, cfg).expect("sized state")
    })
}

/// Leader-follower guessed-set WL as a function of picks, computed through
/// the generic clamp.
pub fn lf_wl<'a>(sets: &'a GuessedEffectSets, tensor: &'a RewardTensor, cfg: &'a LfConfig) -> BoxedUtility<'a> {
    Box::new(move |n, picks| {
        let attended = lf::apply_dynamics(picks, cfg).expect("sized state");
        lf::reward_wl_lf_clamped(n, &attended, sets, tensor, cfg).expect("sized state")
    })
}

/// Limit on the number of states [`enumerate_states`] will produce.
pub const MAX_ENUMERATED_STATES: usize = 1 << 20;

/// Every unclamped state of `nodes` nodes over `nights` nights.
pub fn enumerate_states(nodes: usize, nights: usize) -> Result<Vec<WeekState>> {
    let count = (nights as u128).checked_pow(nodes as u32).unwrap_or(u128::MAX);
    if count > MAX_ENUMERATED_STATES as u128 || nights == 0 {
        return Err(Error::Domain(format!(
            "{nights}^{nodes} states cannot be enumerated (limit {MAX_ENUMERATED_STATES})"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; nodes];
    for _ in 0..count {
        out.push(WeekState::from_indices(nights, &digits)?);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < nights {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Fraction of (state, node) pairs where two personal utilities give the node
/// the same exhaustive intelligence.
pub fn intelligence_agreement(a: &dyn Utility, b: &dyn Utility, states: &[WeekState]) -> Result<f64> {
    let mut same = 0usize;
    let mut total = 0usize;
    for s in states {
        for node in 0..s.len() {
            let ia = diagnostics::intelligence(a, s, node, CounterfactualMeasure::Exhaustive)?;
            let ib = diagnostics::intelligence(b, s, node, CounterfactualMeasure::Exhaustive)?;
            same += usize::from(ia == ib);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::domain("no states to compare"));
    }
    Ok(same as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardDiagnostics {
    pub reward: RewardKind,
    /// Exhaustive factoredness degree against the world reward.
    pub factoredness: f64,
    /// Fraction of (state, node) pairs whose intelligence equals the
    /// intelligence under the world reward.
    pub intelligence_agreement: f64,
    /// Learnability of node 0, averaged over all states.
    pub mean_learnability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub environment: Environment,
    pub nodes: usize,
    pub nights: usize,
    pub states: usize,
    pub rewards: Vec<RewardDiagnostics>,
    /// Bar only: finite-difference WL/G differential learnability ratio for
    /// node 0 at the round-robin state (agent `i` on night `i mod K`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub differential_ratio: Option<f64>,
    /// Bar only, when `N > 7c`: closed-form ratio at uniform attendance.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closed_form_ratio: Option<f64>,
}

fn summarise(
    reward: RewardKind,
    world: &dyn Utility,
    personal: &dyn Utility,
    states: &[WeekState],
) -> Result<RewardDiagnostics> {
    let factoredness = diagnostics::factoredness_degree(world, personal, states, CounterfactualMeasure::Exhaustive)?;
    let intelligence_agreement = intelligence_agreement(personal, world, states)?;
    let mut finite = Vec::new();
    for s in states {
        let l = diagnostics::learnability(personal, s, 0, CounterfactualMeasure::Exhaustive)?;
        if l.is_finite() {
            finite.push(l);
        }
    }
    let mean_learnability = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok(RewardDiagnostics {
        reward,
        factoredness,
        intelligence_agreement,
        mean_learnability,
    })
}

/// Exhaustive diagnostics of a small instance described by `cfg`.
pub fn diagnose(cfg: &ExperimentConfig) -> Result<DiagnosticReport> {
    match cfg.environment {
        Environment::Bar => {
            let bar_cfg = cfg.bar()?;
            let states = enumerate_states(bar_cfg.agents, bar_cfg.nights)?;
            let world = bar_world(&bar_cfg);
            let rewards = [RewardKind::UniformDivision, RewardKind::Global, RewardKind::WonderfulLife]
                .into_iter()
                .map(|k| summarise(k, &world, &bar_personal(k, &bar_cfg), &states))
                .collect::<Result<Vec<_>>>()?;
            let differential_ratio = if bar_cfg.agents >= 2 {
                let picks: Vec<usize> = (0..bar_cfg.agents).map(|i| i % bar_cfg.nights).collect();
                let s = WeekState::from_indices(bar_cfg.nights, &picks)?;
                let wl = |n: usize, e: &Embedding| bar::reward_wl_embedded(n, e, &bar_cfg);
                let g = |_: usize, e: &Embedding| bar::world_reward_embedded(e, &bar_cfg);
                let a = diagnostics::differential_learnability(&wl, &s, 0, diagnostics::DEFAULT_FD_STEP)?;
                let b = diagnostics::differential_learnability(&g, &s, 0, diagnostics::DEFAULT_FD_STEP)?;
                Some(a / b)
            } else {
                None
            };
            let closed_form_ratio = if bar_cfg.nights == 7 {
                diagnostics::bar_closed_form_ratio(bar_cfg.agents, bar_cfg.capacity).ok()
            } else {
                None
            };
            Ok(DiagnosticReport {
                environment: Environment::Bar,
                nodes: bar_cfg.agents,
                nights: bar_cfg.nights,
                states: states.len(),
                rewards,
                differential_ratio,
                closed_form_ratio,
            })
        }
        Environment::LeaderFollower => {
            let lf_cfg = cfg.leader_follower();
            lf_cfg.validate()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let tensor = match lf_cfg.tensor {
                TensorKind::WorstCase => lf::worst_case_tensor(lf_cfg.nights, lf_cfg.penalty)?,
                TensorKind::Random => lf::random_tensor(lf_cfg.nights, &mut rng)?,
            };
            let sets = GuessedEffectSets::initial(&lf_cfg, cfg.guessed_sets, &mut rng);
            let states = enumerate_states(lf_cfg.agents(), lf_cfg.nights)?;
            let world = lf_world(&tensor, &lf_cfg);
            let rewards = vec![
                summarise(RewardKind::Global, &world, &lf_world(&tensor, &lf_cfg), &states)?,
                summarise(RewardKind::WonderfulLife, &world, &lf_wl(&sets, &tensor, &lf_cfg), &states)?,
            ];
            Ok(DiagnosticReport {
                environment: Environment::LeaderFollower,
                nodes: lf_cfg.agents(),
                nights: lf_cfg.nights,
                states: states.len(),
                rewards,
                differential_ratio: None,
                closed_form_ratio: None,
            })
        }
    }
}

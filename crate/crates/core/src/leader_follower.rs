//! The leader-follower environment.
//!
//! Agents come in triples: agent `3i` is leader `i` and agents `3i + 1`,
//! `3i + 2` are its followers. Whatever night a follower picks, the dynamics
//! force it to attend its leader's night. The world reward sums a shared
//! `K x K x K` tensor over the (leader, follower, follower) attended nights of
//! every triple; a clamped agent indexes the tensor at 0.
//!
//! Each agent is rewarded with the Wonderful Life utility of its guessed
//! effect set. When a leader's guess omits its followers, clamping it reaches
//! tensor cells that the dynamics can never produce, and a suitably chosen
//! tensor turns that into an incentive to minimise world reward.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::worldline::{ClampSet, NightChoice, WeekState, WorldUtility, Worldline};

pub const FOLLOWERS_PER_LEADER: usize = 2;
const TRIPLE: usize = FOLLOWERS_PER_LEADER + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    WorstCase,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfConfig {
    pub num_leaders: usize,
    pub nights: usize,
    pub tensor: TensorKind,
    /// Penalty `B` of the worst-case tensor.
    pub penalty: f64,
}

impl Default for LfConfig {
    fn default() -> Self {
        LfConfig {
            num_leaders: 56,
            nights: 7,
            tensor: TensorKind::WorstCase,
            penalty: 2.0,
        }
    }
}

impl LfConfig {
    pub fn agents(&self) -> usize {
        TRIPLE * self.num_leaders
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_leaders == 0 {
            return Err(Error::config("num_leaders", "must be positive"));
        }
        if self.nights < 2 {
            return Err(Error::config("nights", "the leader-follower tensor needs at least 2 nights"));
        }
        if self.tensor == TensorKind::WorstCase && !(self.penalty > 1.0 && self.penalty.is_finite()) {
            return Err(Error::config("penalty", format!("must be > 1, got {}", self.penalty)));
        }
        Ok(())
    }
}

/// Agent index of leader `i`.
#[inline]
pub fn leader_agent(leader: usize) -> usize {
    TRIPLE * leader
}

/// Leader (triple) index that `agent` belongs to.
#[inline]
pub fn triple_of(agent: usize) -> usize {
    agent / TRIPLE
}

#[inline]
pub fn is_leader(agent: usize) -> bool {
    agent % TRIPLE == 0
}

pub fn followers(leader: usize) -> [usize; FOLLOWERS_PER_LEADER] {
    let a = leader_agent(leader);
    [a + 1, a + 2]
}

/// `R[l, f1, f2]`, defined on every index triple including those the dynamics
/// cannot realise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTensor {
    nights: usize,
    entries: Vec<f64>,
}

impl RewardTensor {
    pub fn zeros(nights: usize) -> Self {
        RewardTensor {
            nights,
            entries: vec![0.0; nights * nights * nights],
        }
    }

    pub fn nights(&self) -> usize {
        self.nights
    }

    #[inline]
    pub fn get(&self, l: usize, f1: usize, f2: usize) -> f64 {
        self.entries[(l * self.nights + f1) * self.nights + f2]
    }

    pub fn set(&mut self, l: usize, f1: usize, f2: usize, value: f64) -> Result<()> {
        let k = self.nights;
        if l >= k || f1 >= k || f2 >= k {
            return Err(Error::Domain(format!("tensor index ({l},{f1},{f2}) outside {k} nights")));
        }
        if !value.is_finite() {
            return Err(Error::Domain(format!("non-finite tensor entry {value}")));
        }
        self.entries[(l * k + f1) * k + f2] = value;
        Ok(())
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Best realisable per-triple reward, `max_l R[l, l, l]`.
    pub fn best_diagonal(&self) -> f64 {
        (0..self.nights).map(|l| self.get(l, l, l)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `R[l,l,l] = l/(K-1)`, `R[0,m,m] = m*B` for `m >= 1`, zero elsewhere.
///
/// A leader whose guessed set holds none of its followers sees
/// `l/(K-1) - l*B` and drifts to night 0; with both followers in the set it
/// sees `l/(K-1)` and heads to night `K-1`. For `K = 2` this is the two-night
/// example with `R_111 = 1`, `R_000 = 0`, `R_011 = B`.
pub fn worst_case_tensor(nights: usize, penalty: f64) -> Result<RewardTensor> {
    if nights < 2 {
        return Err(Error::domain("worst-case tensor needs at least 2 nights"));
    }
    if !(penalty > 1.0 && penalty.is_finite()) {
        return Err(Error::Domain(format!("penalty must be > 1, got {penalty}")));
    }
    let mut r = RewardTensor::zeros(nights);
    let top = (nights - 1) as f64;
    for l in 1..nights {
        r.set(l, l, l, l as f64 / top)?;
        r.set(0, l, l, l as f64 * penalty)?;
    }
    Ok(r)
}

/// Entries i.i.d. uniform on `[0, 1]`.
pub fn random_tensor<R: Rng + ?Sized>(nights: usize, rng: &mut R) -> Result<RewardTensor> {
    if nights < 2 {
        return Err(Error::domain("random tensor needs at least 2 nights"));
    }
    let n = nights * nights * nights;
    Ok(RewardTensor {
        nights,
        entries: (0..n).map(|_| rng.random_range(0.0..=1.0)).collect(),
    })
}

/// How leaders' guessed effect sets start out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessInit {
    /// Each leader guesses itself plus its two followers.
    Correct,
    /// Each leader guesses only itself.
    NoneFollowers,
    /// Each leader guesses itself plus two agents drawn without replacement
    /// from all other agents.
    Random,
}

/// Guessed effect set of every agent. Each set contains its owner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuessedEffectSets(Vec<BTreeSet<usize>>);

impl GuessedEffectSets {
    /// Everyone guesses only itself.
    pub fn singletons(agents: usize) -> Self {
        GuessedEffectSets((0..agents).map(|a| BTreeSet::from([a])).collect())
    }

    pub fn from_sets(sets: Vec<BTreeSet<usize>>) -> Result<Self> {
        let n = sets.len();
        for (a, s) in sets.iter().enumerate() {
            if !s.contains(&a) {
                return Err(Error::Domain(format!("guessed set of agent {a} does not contain the agent")));
            }
            if let Some(&bad) = s.iter().find(|&&m| m >= n) {
                return Err(Error::Index {
                    what: "guessed-set member",
                    index: bad,
                    bound: n,
                });
            }
        }
        Ok(GuessedEffectSets(sets))
    }

    /// Followers always start with singleton sets.
    pub fn initial<R: Rng + ?Sized>(cfg: &LfConfig, init: GuessInit, rng: &mut R) -> Self {
        let agents = cfg.agents();
        let mut sets = Self::singletons(agents);
        for leader in 0..cfg.num_leaders {
            let a = leader_agent(leader);
            match init {
                GuessInit::Correct => sets.0[a].extend(followers(leader)),
                GuessInit::NoneFollowers => {}
                GuessInit::Random => {
                    if agents > 1 {
                        let picks = sample(rng, agents - 1, FOLLOWERS_PER_LEADER.min(agents - 1));
                        // map [0, agents-1) onto the agents other than `a`
                        sets.0[a].extend(picks.iter().map(|p| if p >= a { p + 1 } else { p }));
                    }
                }
            }
        }
        sets
    }

    pub fn get(&self, agent: usize) -> &BTreeSet<usize> {
        &self.0[agent]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn set(&mut self, agent: usize, members: BTreeSet<usize>) -> Result<()> {
        if !members.contains(&agent) {
            return Err(Error::Domain(format!("guessed set of agent {agent} does not contain the agent")));
        }
        self.0[agent] = members;
        Ok(())
    }

    pub fn contains_both_followers(&self, leader: usize) -> bool {
        let s = &self.0[leader_agent(leader)];
        followers(leader).iter().all(|f| s.contains(f))
    }

    /// Sets of the leaders, in leader order.
    pub fn leader_sets(&self) -> Vec<Vec<usize>> {
        (0..self.0.len() / TRIPLE)
            .map(|i| self.0[leader_agent(i)].iter().copied().collect())
            .collect()
    }
}

/// Followers attend whatever night their leader picked.
pub fn apply_dynamics(picks: &WeekState, cfg: &LfConfig) -> Result<WeekState> {
    check_len(picks, cfg)?;
    let mut attended = picks.clone();
    for leader in 0..cfg.num_leaders {
        if let Some(night) = picks.choice(leader_agent(leader)) {
            for f in followers(leader) {
                attended.set_choice(f, night);
            }
        }
    }
    Ok(attended)
}

fn check_len(state: &WeekState, cfg: &LfConfig) -> Result<()> {
    if state.len() != cfg.agents() {
        return Err(Error::Domain(format!(
            "state has {} agents, configuration expects {}",
            state.len(),
            cfg.agents()
        )));
    }
    Ok(())
}

#[inline]
fn tensor_index(slot: Option<NightChoice>) -> usize {
    slot.map_or(0, NightChoice::index)
}

#[inline]
fn triple_reward(state: &WeekState, leader: usize, tensor: &RewardTensor) -> f64 {
    let a = leader_agent(leader);
    tensor.get(
        tensor_index(state.choice(a)),
        tensor_index(state.choice(a + 1)),
        tensor_index(state.choice(a + 2)),
    )
}

/// `sum_i R[l_i, f1_i, f2_i]` over leaders in index order.
pub fn world_reward_lf(attended: &WeekState, tensor: &RewardTensor, cfg: &LfConfig) -> Result<f64> {
    check_len(attended, cfg)?;
    Ok((0..cfg.num_leaders).map(|i| triple_reward(attended, i, tensor)).sum())
}

/// Wonderful Life reward of `agent` for its guessed effect set, evaluated on
/// already-attended nights. Only triples touched by the guessed set change
/// under the clamp, so only those are evaluated.
pub fn reward_wl_lf(
    agent: usize,
    attended: &WeekState,
    sets: &GuessedEffectSets,
    tensor: &RewardTensor,
    cfg: &LfConfig,
) -> Result<f64> {
    check_len(attended, cfg)?;
    if agent >= cfg.agents() {
        return Err(Error::Index {
            what: "agent",
            index: agent,
            bound: cfg.agents(),
        });
    }
    let members = sets.get(agent);
    let touched: BTreeSet<usize> = members.iter().map(|&m| triple_of(m)).collect();
    let mut total = 0.0;
    for leader in touched {
        let base = leader_agent(leader);
        let idx = |slot: usize| {
            let a = base + slot;
            if members.contains(&a) {
                0
            } else {
                tensor_index(attended.choice(a))
            }
        };
        total += triple_reward(attended, leader, tensor) - tensor.get(idx(0), idx(1), idx(2));
    }
    Ok(total)
}

/// Reference form of [`reward_wl_lf`]: `G(s) - G(CL_sigma(s))` through the
/// generic clamp, with no re-application of the dynamics.
pub fn reward_wl_lf_clamped(
    agent: usize,
    attended: &WeekState,
    sets: &GuessedEffectSets,
    tensor: &RewardTensor,
    cfg: &LfConfig,
) -> Result<f64> {
    check_len(attended, cfg)?;
    let g = WorldUtility::new(|w: &WeekState| world_reward_lf(w, tensor, cfg).expect("length checked"));
    let sigma = ClampSet::nodes_in_week(sets.get(agent).iter().copied(), 0);
    crate::worldline::wlu(&g, &sigma, &Worldline::single(attended.clone()))
}

/// Largest world reward any week can produce.
pub fn optimum(tensor: &RewardTensor, cfg: &LfConfig) -> f64 {
    cfg.num_leaders as f64 * tensor.best_diagonal()
}

//! Worldlines, clamping and Wonderful Life utility.
//!
//! A worldline is the full history of every node's state over a run. Each
//! node's state in a given week is a night index, stored compactly; the unary
//! (one-hot) embedding that the continuous diagnostics need is derived on
//! demand. Clamping a node overwrites its state with the null night, whose
//! unary embedding is the all-zero vector: the node attends nothing.
//!
//! Clamping is purely counterfactual. No dynamics are re-run after a clamp,
//! so in the leader-follower environment a clamped leader's followers keep the
//! nights they actually attended.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a night, always below the number of nights `K` of the state it
/// lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NightChoice(usize);

impl NightChoice {
    pub fn new(index: usize, nights: usize) -> Result<Self> {
        if index >= nights {
            return Err(Error::Index {
                what: "night",
                index,
                bound: nights,
            });
        }
        Ok(NightChoice(index))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

/// One-hot encoding of a night choice. The all-zero vector encodes a clamped
/// node.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryEmbedding(Vec<f64>);

impl UnaryEmbedding {
    /// The embedding of a clamped node.
    pub fn null(nights: usize) -> Self {
        UnaryEmbedding(vec![0.0; nights])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn night_to_unary(choice: NightChoice, nights: usize) -> Result<UnaryEmbedding> {
    if choice.index() >= nights {
        return Err(Error::Domain(format!(
            "night {} does not exist in a {nights}-night week",
            choice.index()
        )));
    }
    let mut v = vec![0.0; nights];
    v[choice.index()] = 1.0;
    Ok(UnaryEmbedding(v))
}

/// Inverse of [`night_to_unary`]. Returns `None` for the null (clamped)
/// embedding and an error for anything that is not one-hot or all-zero.
pub fn unary_to_night(embedding: &UnaryEmbedding) -> Result<Option<NightChoice>> {
    let mut found = None;
    for (k, &v) in embedding.0.iter().enumerate() {
        if v == 1.0 {
            if found.is_some() {
                return Err(Error::domain("unary vector has more than one hot component"));
            }
            found = Some(NightChoice(k));
        } else if v != 0.0 {
            return Err(Error::domain(format!("unary component {k} is {v}, expected 0 or 1")));
        }
    }
    Ok(found)
}

/// The state of every node for a single week. `None` marks a clamped node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeekState {
    nights: usize,
    slots: Vec<Option<NightChoice>>,
}

impl WeekState {
    /// Build an unclamped state from raw night indices.
    pub fn from_indices(nights: usize, choices: &[usize]) -> Result<Self> {
        let slots = choices
            .iter()
            .map(|&c| NightChoice::new(c, nights).map(Some))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeekState { nights, slots })
    }

    pub fn from_choices(nights: usize, choices: Vec<NightChoice>) -> Result<Self> {
        if let Some(bad) = choices.iter().find(|c| c.index() >= nights) {
            return Err(Error::Index {
                what: "night",
                index: bad.index(),
                bound: nights,
            });
        }
        Ok(WeekState {
            nights,
            slots: choices.into_iter().map(Some).collect(),
        })
    }

    /// Number of nights `K` in the week.
    #[inline]
    pub fn nights(&self) -> usize {
        self.nights
    }

    /// Number of nodes `N`.
    #[inline]
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    #[inline]
    pub fn choice(&self, node: usize) -> Option<NightChoice> {
        self.slots[node]
    }

    #[inline]
    pub fn is_clamped(&self, node: usize) -> bool {
        self.slots[node].is_none()
    }

    pub fn has_clamped(&self) -> bool {
        self.slots.iter().any(Option::is_none)
    }

    pub fn slots(&self) -> &[Option<NightChoice>] {
        &self.slots
    }

    /// Night indices of an unclamped state, or `None` if any node is clamped.
    pub fn indices(&self) -> Option<Vec<usize>> {
        self.slots.iter().map(|s| s.map(NightChoice::index)).collect()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.slots.len() {
            return Err(Error::Index {
                what: "node",
                index: node,
                bound: self.slots.len(),
            });
        }
        Ok(())
    }

    /// The same state with `node` moved to `night` (and unclamped).
    pub fn with_choice(&self, node: usize, night: NightChoice) -> Result<WeekState> {
        self.check_node(node)?;
        if night.index() >= self.nights {
            return Err(Error::Index {
                what: "night",
                index: night.index(),
                bound: self.nights,
            });
        }
        let mut next = self.clone();
        next.slots[node] = Some(night);
        Ok(next)
    }

    /// In-place variant of [`WeekState::with_choice`] for hot loops; indices
    /// are assumed valid.
    pub(crate) fn set_choice(&mut self, node: usize, night: NightChoice) {
        debug_assert!(night.index() < self.nights);
        self.slots[node] = Some(night);
    }

    /// Clamp the given nodes of this week to the null night.
    pub fn clamp_nodes<I: IntoIterator<Item = usize>>(&self, nodes: I) -> Result<WeekState> {
        let mut next = self.clone();
        for node in nodes {
            self.check_node(node)?;
            next.slots[node] = None;
        }
        Ok(next)
    }

    pub fn unary(&self, node: usize) -> UnaryEmbedding {
        match self.slots[node] {
            Some(c) => {
                let mut v = vec![0.0; self.nights];
                v[c.index()] = 1.0;
                UnaryEmbedding(v)
            }
            None => UnaryEmbedding::null(self.nights),
        }
    }

    pub fn embedding(&self) -> Embedding {
        let mut e = Embedding::zeros(self.len(), self.nights);
        for (node, slot) in self.slots.iter().enumerate() {
            if let Some(c) = slot {
                e.set(node, c.index(), 1.0);
            }
        }
        e
    }
}

/// Real-valued extension of a week's unary states: an `N x K` matrix whose
/// rows are node embeddings. Off the hypercube vertices this is where the
/// differential diagnostics live.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    nodes: usize,
    nights: usize,
    values: Vec<f64>,
}

impl Embedding {
    pub fn zeros(nodes: usize, nights: usize) -> Self {
        Embedding {
            nodes,
            nights,
            values: vec![0.0; nodes * nights],
        }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn nights(&self) -> usize {
        self.nights
    }

    #[inline]
    pub fn get(&self, node: usize, night: usize) -> f64 {
        self.values[node * self.nights + night]
    }

    #[inline]
    pub fn set(&mut self, node: usize, night: usize, value: f64) {
        self.values[node * self.nights + night] = value;
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.nights..(node + 1) * self.nights]
    }

    /// Zero a node's row (the clamp of the continuous extension).
    pub fn clear_row(&mut self, node: usize) {
        let k = self.nights;
        self.values[node * k..(node + 1) * k].fill(0.0);
    }

    /// Column sums: the (real-valued) attendance of each night.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.nights];
        for row in self.values.chunks_exact(self.nights) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

/// The full time-indexed history of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Worldline {
    weeks: Vec<WeekState>,
}

impl Worldline {
    pub fn new(weeks: Vec<WeekState>) -> Result<Self> {
        if let Some(first) = weeks.first() {
            for (t, w) in weeks.iter().enumerate() {
                if w.len() != first.len() || w.nights() != first.nights() {
                    return Err(Error::Domain(format!(
                        "week {t} has {} nodes x {} nights, expected {} x {}",
                        w.len(),
                        w.nights(),
                        first.len(),
                        first.nights()
                    )));
                }
            }
        }
        Ok(Worldline { weeks })
    }

    pub fn single(week: WeekState) -> Self {
        Worldline { weeks: vec![week] }
    }

    pub fn weeks(&self) -> &[WeekState] {
        &self.weeks
    }

    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.weeks.first().map_or(0, WeekState::len)
    }

    /// Split into `[0, at)` and `[at, T)`.
    pub fn split_at(&self, at: usize) -> (Worldline, Worldline) {
        let (a, b) = self.weeks.split_at(at.min(self.weeks.len()));
        (
            Worldline { weeks: a.to_vec() },
            Worldline { weeks: b.to_vec() },
        )
    }
}

/// A set of `(node, week)` components to clamp.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClampSet {
    members: BTreeSet<(usize, usize)>,
}

impl ClampSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Clamp the given nodes in a single week.
    pub fn nodes_in_week<I: IntoIterator<Item = usize>>(nodes: I, week: usize) -> Self {
        nodes.into_iter().map(|n| (n, week)).collect()
    }

    pub fn insert(&mut self, node: usize, week: usize) -> bool {
        self.members.insert((node, week))
    }

    pub fn contains(&self, node: usize, week: usize) -> bool {
        self.members.contains(&(node, week))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_disjoint(&self, other: &ClampSet) -> bool {
        self.members.is_disjoint(&other.members)
    }
}

impl FromIterator<(usize, usize)> for ClampSet {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        ClampSet {
            members: iter.into_iter().collect(),
        }
    }
}

/// Overwrite every component in `sigma` with the null night.
pub fn clamp(worldline: &Worldline, sigma: &ClampSet) -> Result<Worldline> {
    let nodes = worldline.nodes();
    let weeks = worldline.len();
    let mut out = worldline.weeks.clone();
    for (node, week) in sigma.iter() {
        if node >= nodes || week >= weeks {
            return Err(Error::ClampOutOfBounds {
                node,
                week,
                nodes,
                weeks,
            });
        }
        out[week].slots[node] = None;
    }
    Ok(Worldline { weeks: out })
}

/// A per-week world reward `R`.
pub trait WeekReward {
    fn reward(&self, week: &WeekState) -> f64;
}

impl<F: Fn(&WeekState) -> f64> WeekReward for F {
    fn reward(&self, week: &WeekState) -> f64 {
        self(week)
    }
}

/// World utility of the week-additive form `G = sum_t R(week_t)`.
#[derive(Debug, Clone, Copy)]
pub struct WorldUtility<R> {
    per_week: R,
}

impl<R: WeekReward> WorldUtility<R> {
    pub fn new(per_week: R) -> Self {
        WorldUtility { per_week }
    }

    pub fn per_week(&self) -> &R {
        &self.per_week
    }

    pub fn evaluate(&self, worldline: &Worldline) -> f64 {
        worldline.weeks().iter().map(|w| self.per_week.reward(w)).sum()
    }
}

/// Wonderful Life utility: `G(w) - G(CL_sigma(w))`.
pub fn wlu<R: WeekReward>(g: &WorldUtility<R>, sigma: &ClampSet, worldline: &Worldline) -> Result<f64> {
    let clamped = clamp(worldline, sigma)?;
    Ok(g.evaluate(worldline) - g.evaluate(&clamped))
}

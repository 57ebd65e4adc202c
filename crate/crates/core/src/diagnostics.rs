//! Single-week diagnostics of personal utilities.
//!
//! Every estimator here works on one week recast as a single-stage game: a
//! utility is a function of the week's picks, and counterfactuals replace the
//! choice of one node (or of every other node) while the rest stay fixed.
//! Environments with dynamics fold them into the utility, so a counterfactual
//! pick is always evaluated on the state the dynamics would produce from it.
//!
//! * **Intelligence** of a node: the fraction of its alternative actions that
//!   would not have scored better under the utility.
//! * **Factoredness degree**: the fraction of single-node counterfactuals in
//!   which the personal utility and the world utility move with the same sign.
//! * **Learnability**: how strongly the utility responds to the node's own
//!   choice relative to the choices of everyone else.
//! * **Differential learnability**: the same signal-to-noise ratio taken from
//!   gradient norms on the real-valued (unary) extension of the state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::worldline::{Embedding, NightChoice, WeekState};

/// Which counterfactual actions an estimator ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterfactualMeasure {
    /// Every action, each once.
    Exhaustive,
    /// `samples` uniform draws from a generator seeded with `seed`.
    Sampled { samples: usize, seed: u64 },
}

impl CounterfactualMeasure {
    fn rng(&self) -> Option<(usize, ChaCha8Rng)> {
        match *self {
            CounterfactualMeasure::Exhaustive => None,
            CounterfactualMeasure::Sampled { samples, seed } => Some((samples, ChaCha8Rng::seed_from_u64(seed))),
        }
    }
}

/// A personal utility `g_node(state)` over one week. World utilities ignore
/// `node`.
pub trait Utility {
    fn evaluate(&self, node: usize, state: &WeekState) -> f64;
}

impl<F: Fn(usize, &WeekState) -> f64> Utility for F {
    fn evaluate(&self, node: usize, state: &WeekState) -> f64 {
        self(node, state)
    }
}

/// A personal utility extended to real-valued unary embeddings.
pub trait SmoothUtility {
    fn evaluate(&self, node: usize, embedding: &Embedding) -> f64;
}

impl<F: Fn(usize, &Embedding) -> f64> SmoothUtility for F {
    fn evaluate(&self, node: usize, embedding: &Embedding) -> f64 {
        self(node, embedding)
    }
}

fn check_probe(state: &WeekState, node: usize) -> Result<()> {
    if node >= state.len() {
        return Err(Error::Index {
            what: "node",
            index: node,
            bound: state.len(),
        });
    }
    if state.has_clamped() {
        return Err(Error::domain("diagnostics need a state without clamped nodes"));
    }
    Ok(())
}

fn night(index: usize, nights: usize) -> NightChoice {
    NightChoice::new(index, nights).expect("index drawn below nights")
}

/// Fraction of counterfactual actions `a` with `u(s) >= u(s with node -> a)`.
///
/// The exhaustive measure includes the node's actual action, so the result
/// lies in `[1/K, 1]`.
pub fn intelligence<U: Utility + ?Sized>(
    u: &U,
    state: &WeekState,
    node: usize,
    measure: CounterfactualMeasure,
) -> Result<f64> {
    check_probe(state, node)?;
    let k = state.nights();
    let actions: Vec<usize> = match measure.rng() {
        None => (0..k).collect(),
        Some((samples, mut rng)) => (0..samples).map(|_| rng.random_range(0..k)).collect(),
    };
    if actions.is_empty() {
        return Err(Error::domain("counterfactual measure is empty"));
    }
    let actual = u.evaluate(node, state);
    let mut probe = state.clone();
    let not_better = actions
        .iter()
        .filter(|&&a| {
            probe.set_choice(node, night(a, k));
            actual - u.evaluate(node, &probe) >= 0.0
        })
        .count();
    Ok(not_better as f64 / actions.len() as f64)
}

#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign-agreement fraction between personal and world utility changes, over
/// every node of every sampled state.
pub fn factoredness_degree<W: Utility + ?Sized, G: Utility + ?Sized>(
    world: &W,
    personal: &G,
    states: &[WeekState],
    measure: CounterfactualMeasure,
) -> Result<f64> {
    let mut agree = 0usize;
    let mut total = 0usize;
    for s in states {
        let nodes: Vec<usize> = (0..s.len()).collect();
        let (a, t) = sign_agreement(world, personal, s, &nodes, measure)?;
        agree += a;
        total += t;
    }
    if total == 0 {
        return Err(Error::domain("no counterfactual triples to compare"));
    }
    Ok(agree as f64 / total as f64)
}

/// [`factoredness_degree`] restricted to the listed probe nodes.
pub fn factoredness_degree_for<W: Utility + ?Sized, G: Utility + ?Sized>(
    world: &W,
    personal: &G,
    states: &[WeekState],
    nodes: &[usize],
    measure: CounterfactualMeasure,
) -> Result<f64> {
    let mut agree = 0usize;
    let mut total = 0usize;
    for s in states {
        let (a, t) = sign_agreement(world, personal, s, nodes, measure)?;
        agree += a;
        total += t;
    }
    if total == 0 {
        return Err(Error::domain("no counterfactual triples to compare"));
    }
    Ok(agree as f64 / total as f64)
}

/// Counterfactual actions always differ from the node's actual choice.
fn sign_agreement<W: Utility + ?Sized, G: Utility + ?Sized>(
    world: &W,
    personal: &G,
    state: &WeekState,
    nodes: &[usize],
    measure: CounterfactualMeasure,
) -> Result<(usize, usize)> {
    let k = state.nights();
    let mut rng = measure.rng();
    let world_actual = world.evaluate(0, state);
    let mut agree = 0;
    let mut total = 0;
    for &node in nodes {
        check_probe(state, node)?;
        let own = state.choice(node).expect("unclamped").index();
        let alternatives: Vec<usize> = match rng.as_mut() {
            None => (0..k).filter(|&a| a != own).collect(),
            Some((samples, rng)) if k > 1 => (0..*samples)
                .map(|_| {
                    let a = rng.random_range(0..k - 1);
                    if a >= own {
                        a + 1
                    } else {
                        a
                    }
                })
                .collect(),
            Some(_) => Vec::new(),
        };
        let personal_actual = personal.evaluate(node, state);
        let mut probe = state.clone();
        for a in alternatives {
            probe.set_choice(node, night(a, k));
            let dg = personal_actual - personal.evaluate(node, &probe);
            let dw = world_actual - world.evaluate(node, &probe);
            if sign(dg) == sign(dw) {
                agree += 1;
            }
            total += 1;
        }
    }
    Ok((agree, total))
}

/// Upper bound on exhaustively enumerated complement configurations.
pub const MAX_EXHAUSTIVE_CONFIGS: usize = 1 << 22;

/// Mean response to resampling the node's own choice divided by the mean
/// response to resampling every other node's choice. Returns `+inf` when the
/// utility does not respond to the other nodes at all.
pub fn learnability<U: Utility + ?Sized>(
    u: &U,
    state: &WeekState,
    node: usize,
    measure: CounterfactualMeasure,
) -> Result<f64> {
    check_probe(state, node)?;
    let n = state.len();
    if n < 2 {
        return Err(Error::domain("learnability needs at least two nodes"));
    }
    let k = state.nights();
    let actual = u.evaluate(node, state);
    let mut probe = state.clone();
    let (signal, noise) = match measure.rng() {
        None => {
            let mut signal = 0.0;
            for a in 0..k {
                probe.set_choice(node, night(a, k));
                signal += (u.evaluate(node, &probe) - actual).abs();
            }
            signal /= k as f64;

            let configs = (k as u128).checked_pow((n - 1) as u32).unwrap_or(u128::MAX);
            if configs > MAX_EXHAUSTIVE_CONFIGS as u128 {
                return Err(Error::Domain(format!(
                    "{k}^{} complement configurations are too many to enumerate; use a sampled measure",
                    n - 1
                )));
            }
            let others: Vec<usize> = (0..n).filter(|&j| j != node).collect();
            let mut probe = state.clone();
            let mut digits = vec![0usize; others.len()];
            let mut noise = 0.0;
            let mut count = 0usize;
            loop {
                for (&j, &d) in others.iter().zip(&digits) {
                    probe.set_choice(j, night(d, k));
                }
                noise += (u.evaluate(node, &probe) - actual).abs();
                count += 1;
                // odometer increment
                let mut pos = 0;
                loop {
                    if pos == digits.len() {
                        break;
                    }
                    digits[pos] += 1;
                    if digits[pos] < k {
                        break;
                    }
                    digits[pos] = 0;
                    pos += 1;
                }
                if pos == digits.len() {
                    break;
                }
            }
            (signal, noise / count as f64)
        }
        Some((samples, mut rng)) => {
            if samples == 0 {
                return Err(Error::domain("counterfactual measure is empty"));
            }
            let mut signal = 0.0;
            for _ in 0..samples {
                probe.set_choice(node, night(rng.random_range(0..k), k));
                signal += (u.evaluate(node, &probe) - actual).abs();
            }
            let mut probe = state.clone();
            let mut noise = 0.0;
            for _ in 0..samples {
                for j in (0..n).filter(|&j| j != node) {
                    probe.set_choice(j, night(rng.random_range(0..k), k));
                }
                noise += (u.evaluate(node, &probe) - actual).abs();
            }
            (signal / samples as f64, noise / samples as f64)
        }
    };
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(signal / noise)
}

/// Default finite-difference step on the unary embedding.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// `|grad_own u| / |grad_others u|` on the unary embedding of `state`, with
/// partials from central differences of step `h`. Returns `+inf` when the
/// gradient over the other nodes vanishes.
pub fn differential_learnability<U: SmoothUtility + ?Sized>(
    u: &U,
    state: &WeekState,
    node: usize,
    h: f64,
) -> Result<f64> {
    check_probe(state, node)?;
    if !(h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    let (own, others) = gradient_norms(u, &state.embedding(), node, h);
    if others == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(own / others)
}

/// Euclidean norms of the gradient restricted to the node's own components and
/// to everyone else's.
pub fn gradient_norms<U: SmoothUtility + ?Sized>(u: &U, at: &Embedding, node: usize, h: f64) -> (f64, f64) {
    let mut e = at.clone();
    let mut own = 0.0;
    let mut others = 0.0;
    for j in 0..at.nodes() {
        for k in 0..at.nights() {
            let x = at.get(j, k);
            e.set(j, k, x + h);
            let up = u.evaluate(node, &e);
            e.set(j, k, x - h);
            let down = u.evaluate(node, &e);
            e.set(j, k, x);
            let d = (up - down) / (2.0 * h);
            if j == node {
                own += d * d;
            } else {
                others += d * d;
            }
        }
    }
    (own.sqrt(), others.sqrt())
}

/// Closed-form ratio of WL to G differential learnability in the bar problem
/// with uniform weights and `N/7` agents on every one of seven nights:
///
/// `|sqrt(7) (N - 7c) / ((N - 7c)(1 - e^{1/c}) + 7 e^{1/c})|`.
pub fn bar_closed_form_ratio(agents: usize, capacity: f64) -> Result<f64> {
    let n = agents as f64;
    if agents < 2 {
        return Err(Error::domain("closed-form ratio needs at least two agents"));
    }
    if !(capacity > 0.0) || n <= 7.0 * capacity {
        return Err(Error::Domain(format!(
            "closed-form ratio is evaluated for N > 7c (N = {agents}, c = {capacity})"
        )));
    }
    let excess = n - 7.0 * capacity;
    let e = (1.0 / capacity).exp();
    let denom = excess * (1.0 - e) + 7.0 * e;
    if denom == 0.0 {
        return Err(Error::domain("closed-form ratio denominator vanishes"));
    }
    Ok((7f64.sqrt() * excess / denom).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(k: usize, c: &[usize]) -> WeekState {
        WeekState::from_indices(k, c).unwrap()
    }

    #[test]
    fn intelligence_argmax_and_ties() {
        let table = [5.0, 3.0, 3.0, 1.0, 1.0, 1.0, 1.0];
        let u = |node: usize, s: &WeekState| table[s.choice(node).unwrap().index()];
        assert_eq!(intelligence(&u, &state(7, &[0, 4]), 0, CounterfactualMeasure::Exhaustive).unwrap(), 1.0);
        assert_eq!(
            intelligence(&u, &state(7, &[1, 4]), 0, CounterfactualMeasure::Exhaustive).unwrap(),
            6.0 / 7.0
        );
        let flat = |_: usize, _: &WeekState| 2.0;
        assert_eq!(intelligence(&flat, &state(7, &[3]), 0, CounterfactualMeasure::Exhaustive).unwrap(), 1.0);
    }

    #[test]
    fn intelligence_errors() {
        let u = |_: usize, _: &WeekState| 0.0;
        let s = state(3, &[0, 1]);
        assert!(intelligence(&u, &s, 2, CounterfactualMeasure::Exhaustive).is_err());
        let m = CounterfactualMeasure::Sampled { samples: 0, seed: 1 };
        assert!(intelligence(&u, &s, 0, m).is_err());
        let c = s.clamp_nodes([1]).unwrap();
        assert!(intelligence(&u, &c, 0, CounterfactualMeasure::Exhaustive).is_err());
    }

    #[test]
    fn team_game_is_factored() {
        let g = |_: usize, s: &WeekState| s.indices().unwrap().iter().map(|&c| (c * c) as f64).sum::<f64>();
        let states: Vec<_> = (0..9).map(|i| state(3, &[i % 3, i / 3])).collect();
        assert_eq!(factoredness_degree(&g, &g, &states, CounterfactualMeasure::Exhaustive).unwrap(), 1.0);
    }

    #[test]
    fn learnable_but_not_factored() {
        // night 0 encodes -1 and night 1 encodes +1
        let val = |s: &WeekState, n: usize| if s.choice(n).unwrap().index() == 0 { -1.0 } else { 1.0 };
        let world = move |_: usize, s: &WeekState| val(s, 0) * val(s, 1);
        let personal = move |_: usize, s: &WeekState| val(s, 0);
        let states: Vec<_> = (0..4).map(|i| state(2, &[i % 2, i / 2])).collect();
        let d = factoredness_degree_for(&world, &personal, &states, &[0], CounterfactualMeasure::Exhaustive).unwrap();
        assert_eq!(d, 0.5);
        // the personal utility ignores node 1 entirely
        assert_eq!(
            learnability(&personal, &states[0], 0, CounterfactualMeasure::Exhaustive).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn learnability_without_signal_is_zero() {
        let u = |_: usize, s: &WeekState| s.choice(1).unwrap().index() as f64;
        let s = state(3, &[0, 1, 2]);
        assert_eq!(learnability(&u, &s, 0, CounterfactualMeasure::Exhaustive).unwrap(), 0.0);
        let m = CounterfactualMeasure::Sampled { samples: 50, seed: 4 };
        assert_eq!(learnability(&u, &s, 0, m).unwrap(), 0.0);
        assert!(learnability(&u, &state(3, &[0]), 0, m).is_err());
    }

    #[test]
    fn exhaustive_learnability_refuses_huge_complements() {
        let u = |_: usize, _: &WeekState| 0.0;
        let s = state(7, &[0; 40]);
        assert!(learnability(&u, &s, 0, CounterfactualMeasure::Exhaustive).is_err());
    }

    #[test]
    fn differential_learnability_linear_forms() {
        let own_only = |node: usize, e: &Embedding| e.row(node).iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).sum::<f64>();
        let s = state(4, &[0, 1, 2, 3, 0]);
        assert_eq!(differential_learnability(&own_only, &s, 2, DEFAULT_FD_STEP).unwrap(), f64::INFINITY);

        let total = |_: usize, e: &Embedding| e.column_sums().iter().sum::<f64>();
        for (n, k) in [(5, 4), (9, 7), (2, 3)] {
            let s = state(k, &vec![0; n]);
            let got = differential_learnability(&total, &s, 0, DEFAULT_FD_STEP).unwrap();
            let expect = 1.0 / ((n - 1) as f64).sqrt();
            assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
        }
        assert!(differential_learnability(&total, &s, 0, 0.0).is_err());
    }

    #[test]
    fn closed_form_guards() {
        assert!(bar_closed_form_ratio(42, 6.0).is_err());
        assert!(bar_closed_form_ratio(1, 0.1).is_err());
        let v = bar_closed_form_ratio(168, 6.0).unwrap();
        let e = (1.0f64 / 6.0).exp();
        let expect = (7f64.sqrt() * 126.0 / (126.0 * (1.0 - e) + 7.0 * e)).abs();
        assert_eq!(v, expect);
    }
}

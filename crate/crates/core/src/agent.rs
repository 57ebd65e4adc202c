//! Independent Boltzmann value learners.
//!
//! Each agent keeps one reward estimate per night, samples a night from the
//! Boltzmann distribution over those estimates, and nudges the estimate of the
//! night it picked toward the reward it received.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::worldline::NightChoice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueTable(Vec<f64>);

impl ValueTable {
    pub fn zeros(nights: usize) -> Self {
        ValueTable(vec![0.0; nights])
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("value table needs at least one night"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value estimate {v}")));
        }
        Ok(ValueTable(values))
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

    /// Night with the largest estimate, lowest index on ties. This is the
    /// zero-temperature limit of [`select_night`].
    pub fn greedy_night(&self) -> NightChoice {
        let mut best = 0;
        for (k, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = k;
            }
        }
        NightChoice::new(best, self.0.len()).expect("in range")
    }

    pub fn reset(&mut self) {
        self.0.fill(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub learning_rate: f64,
    pub temp_initial: f64,
    pub temp_decay_time: f64,
    pub temp_floor: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            learning_rate: 0.1,
            temp_initial: 1.0,
            temp_decay_time: 150.0,
            temp_floor: 0.001,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("learning_rate", "must lie in (0, 1]"));
        }
        if !(self.temp_initial > 0.0 && self.temp_initial.is_finite()) {
            return Err(Error::config("temp_initial", "must be positive"));
        }
        if !(self.temp_decay_time > 0.0) {
            return Err(Error::config("temp_decay_time", "must be positive"));
        }
        if !(self.temp_floor > 0.0) {
            return Err(Error::config("temp_floor", "must be positive"));
        }
        if self.temp_floor > self.temp_initial {
            return Err(Error::config("temp_floor", "must not exceed temp_initial"));
        }
        Ok(())
    }
}

/// `max(floor, T0 * exp(-week / tau))`.
pub fn temperature(week: usize, p: &LearnerParams) -> f64 {
    (p.temp_initial * (-(week as f64) / p.temp_decay_time).exp()).max(p.temp_floor)
}

/// Boltzmann probabilities of each night, max-shifted so large estimates do
/// not overflow.
pub fn boltzmann_probabilities(values: &ValueTable, temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    if values.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite value estimate"));
    }
    let max = values.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.0.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

pub fn select_night<R: Rng + ?Sized>(values: &ValueTable, temperature: f64, rng: &mut R) -> Result<NightChoice> {
    let probs = boltzmann_probabilities(values, temperature)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = k;
        }
        acc += p;
        if u < acc {
            return Ok(NightChoice::new(k, probs.len()).expect("in range"));
        }
    }
    // rounding left `acc` just below 1
    Ok(NightChoice::new(last_positive, probs.len()).expect("in range"))
}

/// `v[night] += lr * (reward - v[night])`.
pub fn update(values: &ValueTable, night: NightChoice, reward: f64, learning_rate: f64) -> Result<ValueTable> {
    let mut next = values.clone();
    update_in_place(&mut next, night, reward, learning_rate)?;
    Ok(next)
}

pub fn update_in_place(values: &mut ValueTable, night: NightChoice, reward: f64, learning_rate: f64) -> Result<()> {
    if !reward.is_finite() {
        return Err(Error::Domain(format!("non-finite reward {reward}")));
    }
    if night.index() >= values.0.len() {
        return Err(Error::Index {
            what: "night",
            index: night.index(),
            bound: values.0.len(),
        });
    }
    let v = &mut values.0[night.index()];
    *v += learning_rate * (reward - *v);
    Ok(())
}

/// A microlearner: a value table plus the night it picked this week.
#[derive(Debug, Clone)]
pub struct Learner {
    pub values: ValueTable,
    pub picked: Option<NightChoice>,
}

impl Learner {
    pub fn new(nights: usize) -> Self {
        Learner {
            values: ValueTable::zeros(nights),
            picked: None,
        }
    }

    pub fn pick<R: Rng + ?Sized>(&mut self, temperature: f64, rng: &mut R) -> Result<NightChoice> {
        let c = select_night(&self.values, temperature, rng)?;
        self.picked = Some(c);
        Ok(c)
    }

    /// Learn from the reward for the night picked this week.
    pub fn learn(&mut self, reward: f64, learning_rate: f64) -> Result<()> {
        let night = self
            .picked
            .ok_or_else(|| Error::domain("learner updated before picking a night"))?;
        update_in_place(&mut self.values, night, reward, learning_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    #[test]
    fn equal_estimates_give_uniform_probabilities() {
        let p = boltzmann_probabilities(&ValueTable::from_values(vec![0.3; 7]).unwrap(), 0.7).unwrap();
        for q in p {
            assert!((q - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn boltzmann_single_gap() {
        let mut v = vec![0.0; 7];
        v[0] = 1.0;
        let p = boltzmann_probabilities(&ValueTable::from_values(v).unwrap(), 1.0).unwrap();
        assert!((p[0] - E / (E + 6.0)).abs() < 1e-15);
    }

    #[test]
    fn low_temperature_is_greedy() {
        let v = ValueTable::from_values(vec![0.1, 0.5, 0.2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(select_night(&v, 1e-3, &mut rng).unwrap().index(), 1);
        }
        assert_eq!(v.greedy_night().index(), 1);
        let tie = ValueTable::from_values(vec![0.0, 2.0, 2.0]).unwrap();
        assert_eq!(tie.greedy_night().index(), 1);
    }

    #[test]
    fn select_rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = ValueTable::zeros(3);
        assert!(select_night(&v, 0.0, &mut rng).is_err());
        assert!(ValueTable::from_values(vec![f64::NAN]).is_err());
        let bad = ValueTable(vec![0.0, f64::INFINITY]);
        assert!(select_night(&bad, 1.0, &mut rng).is_err());
    }

    #[test]
    fn sampling_frequencies_follow_probabilities() {
        let v = ValueTable::from_values(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let hits = (0..n).filter(|_| select_night(&v, 1.0, &mut rng).unwrap().index() == 0).count();
        let p = E / (E + 6.0);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 5.0 * sd);
    }

    #[test]
    fn update_examples() {
        let n = NightChoice::new(2, 4).unwrap();
        let v = ValueTable::from_values(vec![0.5, 0.0, 0.3, 0.0]).unwrap();
        assert_eq!(update(&v, n, 7.0, 1.0).unwrap().as_slice()[2], 7.0);
        assert_eq!(update(&v, n, 0.3, 0.4).unwrap(), v);
        let z = ValueTable::zeros(4);
        let u = update(&z, n, 1.0, 0.1).unwrap();
        assert!((u.as_slice()[2] - 0.1).abs() < 1e-15);
        assert_eq!(&u.as_slice()[..2], &[0.0, 0.0]);
        assert!(update(&z, n, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn temperature_schedule() {
        let p = LearnerParams {
            learning_rate: 0.1,
            temp_initial: E * 0.01,
            temp_decay_time: 100.0,
            temp_floor: 0.001,
        };
        assert_eq!(temperature(0, &p), p.temp_initial);
        assert!((temperature(100, &p) - 0.01).abs() < 1e-15);
        assert_eq!(temperature(1_000_000, &p), p.temp_floor);
    }

    #[test]
    fn params_validation() {
        assert!(LearnerParams::default().validate().is_ok());
        let mut p = LearnerParams::default();
        p.learning_rate = 0.0;
        assert!(p.validate().is_err());
        let mut p = LearnerParams::default();
        p.temp_floor = 10.0;
        assert!(p.validate().is_err());
    }
}

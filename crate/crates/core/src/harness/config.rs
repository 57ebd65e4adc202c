use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::LearnerParams;
use crate::bar::{AlphaPreset, BarConfig};
use crate::error::{Error, Result};
use crate::leader_follower::{GuessInit, LfConfig, TensorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Bar,
    LeaderFollower,
}

impl std::str::FromStr for Environment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bar" => Ok(Environment::Bar),
            "leader_follower" => Ok(Environment::LeaderFollower),
            other => Err(Error::config("environment", format!("unknown environment `{other}`"))),
        }
    }
}

/// Personal reward handed to every learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardKind {
    #[serde(rename = "UD")]
    UniformDivision,
    #[serde(rename = "G")]
    Global,
    #[serde(rename = "WL")]
    WonderfulLife,
}

impl std::str::FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "UD" => Ok(RewardKind::UniformDivision),
            "G" => Ok(RewardKind::Global),
            "WL" => Ok(RewardKind::WonderfulLife),
            other => Err(Error::config("reward", format!("unknown reward `{other}` (expected UD, G or WL)"))),
        }
    }
}

/// Night weights: a named preset or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Preset(AlphaPreset),
    Explicit(Vec<f64>),
}

/// A complete experiment description. Serialised as a flat TOML table; every
/// key is optional and falls back to the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(alias = "experiment")]
    pub environment: Environment,
    pub reward: RewardKind,
    pub nights: usize,

    pub agents: usize,
    pub capacity: f64,
    pub alpha: AlphaSpec,

    pub num_leaders: usize,
    pub tensor: TensorKind,
    pub penalty: f64,
    pub guessed_sets: GuessInit,

    pub weeks: usize,
    pub runs: usize,
    pub seed: u64,

    pub learning_rate: f64,
    pub temp_initial: f64,
    pub temp_decay_time: f64,
    pub temp_floor: f64,

    pub macrolearning_week: Option<usize>,
    /// Restart every agent whose guessed set the macrolearner changes: its
    /// value table is cleared and its temperature schedule starts over.
    pub reset_on_macrolearning: bool,
    /// Fraction of the optimum the mean world reward must hold for the
    /// remainder of the run to count as converged.
    pub convergence_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let learner = LearnerParams::default();
        let lf = LfConfig::default();
        ExperimentConfig {
            environment: Environment::Bar,
            reward: RewardKind::WonderfulLife,
            nights: 7,
            agents: 168,
            capacity: 6.0,
            alpha: AlphaSpec::Preset(AlphaPreset::SingleNight),
            num_leaders: lf.num_leaders,
            tensor: lf.tensor,
            penalty: lf.penalty,
            guessed_sets: GuessInit::Random,
            weeks: 2000,
            runs: 20,
            seed: 1,
            learning_rate: learner.learning_rate,
            temp_initial: learner.temp_initial,
            temp_decay_time: learner.temp_decay_time,
            temp_floor: learner.temp_floor,
            macrolearning_week: None,
            reset_on_macrolearning: true,
            convergence_fraction: 0.95,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Encode {
            what: "configuration",
            reason: e.to_string(),
        })
    }

    pub fn learner(&self) -> LearnerParams {
        LearnerParams {
            learning_rate: self.learning_rate,
            temp_initial: self.temp_initial,
            temp_decay_time: self.temp_decay_time,
            temp_floor: self.temp_floor,
        }
    }

    pub fn bar(&self) -> Result<BarConfig> {
        let alpha = match &self.alpha {
            AlphaSpec::Preset(p) => p.weights(self.nights)?,
            AlphaSpec::Explicit(v) => v.clone(),
        };
        BarConfig::new(self.agents, self.nights, self.capacity, alpha)
    }

    pub fn leader_follower(&self) -> LfConfig {
        LfConfig {
            num_leaders: self.num_leaders,
            nights: self.nights,
            tensor: self.tensor,
            penalty: self.penalty,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs", "must be positive"));
        }
        if !(self.convergence_fraction > 0.0 && self.convergence_fraction <= 1.0) {
            return Err(Error::config("convergence_fraction", "must lie in (0, 1]"));
        }
        self.learner().validate()?;
        match self.environment {
            Environment::Bar => {
                self.bar()?;
                if self.macrolearning_week.is_some() {
                    return Err(Error::config(
                        "macrolearning_week",
                        "macrolearning only applies to the leader_follower environment",
                    ));
                }
            }
            Environment::LeaderFollower => {
                if self.reward == RewardKind::UniformDivision {
                    return Err(Error::config("reward", "UD is only defined for the bar environment"));
                }
                self.leader_follower().validate()?;
                if let Some(w) = self.macrolearning_week {
                    if w == 0 {
                        return Err(Error::config("macrolearning_week", "needs at least two observed weeks"));
                    }
                    if self.leader_follower().agents() < 3 {
                        return Err(Error::config("macrolearning_week", "needs at least three agents"));
                    }
                }
            }
        }
        Ok(())
    }
}

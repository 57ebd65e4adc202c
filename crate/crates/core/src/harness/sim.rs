use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Environment, ExperimentConfig, RewardKind};
use crate::agent::{temperature, Learner};
use crate::bar::{self, AttendanceProfile};
use crate::error::Result;
use crate::leader_follower::{self as lf, GuessedEffectSets, TensorKind};
use crate::macrolearn::{self, AttendanceHistory};
use crate::worldline::{NightChoice, WeekState};

/// Outcome of a single seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_index: usize,
    /// World reward of every week.
    pub world_reward: Vec<f64>,
    /// Best world reward a week of this run could reach.
    pub optimum: f64,
    /// Bar only: attendance in the final week.
    pub final_attendance: Option<AttendanceProfile>,
    /// Leader-follower only: guessed effect set of every leader at the end.
    pub final_effect_sets: Option<Vec<Vec<usize>>>,
    /// Leader-follower only: week at which macrolearning fired.
    pub macrolearning_fired: Option<usize>,
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `run_index`. Depends only on the master seed and the index, so
/// adding runs never changes existing ones.
pub fn run_seed(master: u64, run_index: usize) -> u64 {
    mix(master ^ mix(run_index as u64))
}

pub fn run_simulation(cfg: &ExperimentConfig, run_index: usize) -> Result<RunResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(cfg.seed, run_index));
    match cfg.environment {
        Environment::Bar => run_bar(cfg, run_index, &mut rng),
        Environment::LeaderFollower => run_leader_follower(cfg, run_index, &mut rng),
    }
}

/// All runs of an experiment, in run-index order. Runs execute in parallel;
/// the result does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    (0..cfg.runs).into_par_iter().map(|i| run_simulation(cfg, i)).collect()
}

pub fn run_experiment_serial(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    (0..cfg.runs).map(|i| run_simulation(cfg, i)).collect()
}

fn pick_all(learners: &mut [Learner], temp: f64, rng: &mut ChaCha8Rng) -> Result<Vec<NightChoice>> {
    learners.iter_mut().map(|l| l.pick(temp, rng)).collect()
}

fn run_bar(cfg: &ExperimentConfig, run_index: usize, rng: &mut ChaCha8Rng) -> Result<RunResult> {
    let bar_cfg = cfg.bar()?;
    let params = cfg.learner();
    let mut learners = vec![Learner::new(bar_cfg.nights); bar_cfg.agents];
    let mut series = Vec::with_capacity(cfg.weeks);
    let mut rewards = vec![0.0; bar_cfg.agents];
    let mut last_profile = None;

    for week in 0..cfg.weeks {
        let picks = pick_all(&mut learners, temperature(week, &params), rng)?;
        let state = WeekState::from_choices(bar_cfg.nights, picks)?;
        let x = bar::attendance(&state);
        let world = bar::world_reward_of_profile(&x, &bar_cfg);
        for (agent, r) in rewards.iter_mut().enumerate() {
            let d = state.choice(agent).expect("unclamped").index();
            let (alpha, c) = (bar_cfg.alpha[d], bar_cfg.capacity);
            *r = match cfg.reward {
                RewardKind::UniformDivision => bar::ud_from_attendance(x.0[d], alpha, c),
                RewardKind::Global => world,
                RewardKind::WonderfulLife => bar::wl_from_attendance(x.0[d], alpha, c),
            };
        }
        if cfg.reward == RewardKind::Global {
            debug_assert!(rewards.iter().all(|&r| r == world), "team game must share one reward");
        }
        for (l, &r) in learners.iter_mut().zip(&rewards) {
            l.learn(r, params.learning_rate)?;
        }
        series.push(world);
        last_profile = Some(x);
    }

    Ok(RunResult {
        run_index,
        world_reward: series,
        optimum: bar::optimum(&bar_cfg).0,
        final_attendance: last_profile,
        final_effect_sets: None,
        macrolearning_fired: None,
    })
}

fn run_leader_follower(cfg: &ExperimentConfig, run_index: usize, rng: &mut ChaCha8Rng) -> Result<RunResult> {
    let lf_cfg = cfg.leader_follower();
    let params = cfg.learner();
    let tensor = match lf_cfg.tensor {
        TensorKind::WorstCase => lf::worst_case_tensor(lf_cfg.nights, lf_cfg.penalty)?,
        TensorKind::Random => lf::random_tensor(lf_cfg.nights, rng)?,
    };
    let agents = lf_cfg.agents();
    let mut sets = GuessedEffectSets::initial(&lf_cfg, cfg.guessed_sets, rng);
    let mut learners = vec![Learner::new(lf_cfg.nights); agents];
    let mut history = cfg.macrolearning_week.map(|_| AttendanceHistory::new(agents));
    let mut series = Vec::with_capacity(cfg.weeks);
    let mut rewards = vec![0.0; agents];
    let mut fired = None;
    // week at which each learner's annealing schedule started
    let mut born = vec![0usize; agents];

    for week in 0..cfg.weeks {
        let picks = learners
            .iter_mut()
            .zip(&born)
            .map(|(l, &b)| l.pick(temperature(week - b, &params), rng))
            .collect::<Result<Vec<_>>>()?;
        let picks = WeekState::from_choices(lf_cfg.nights, picks)?;
        let attended = lf::apply_dynamics(&picks, &lf_cfg)?;
        let world = lf::world_reward_lf(&attended, &tensor, &lf_cfg)?;
        for (agent, r) in rewards.iter_mut().enumerate() {
            *r = match cfg.reward {
                RewardKind::Global => world,
                _ => lf::reward_wl_lf(agent, &attended, &sets, &tensor, &lf_cfg)?,
            };
        }
        // followers learn on the night they picked, not the one they attended
        for (l, &r) in learners.iter_mut().zip(&rewards) {
            l.learn(r, params.learning_rate)?;
        }
        series.push(world);

        if let Some(h) = history.as_mut() {
            h.record(&attended)?;
            if cfg.macrolearning_week == Some(week) {
                let corr = macrolearn::estimate_correlations(h)?;
                let next = macrolearn::reassign_effect_sets(&corr)?;
                if cfg.reset_on_macrolearning {
                    for (agent, l) in learners.iter_mut().enumerate() {
                        if next.get(agent) != sets.get(agent) {
                            l.values.reset();
                            born[agent] = week + 1;
                        }
                    }
                }
                sets = next;
                fired = Some(week);
                history = None;
            }
        }
    }

    Ok(RunResult {
        run_index,
        world_reward: series,
        optimum: lf::optimum(&tensor, &lf_cfg),
        final_attendance: None,
        final_effect_sets: Some(sets.leader_sets()),
        macrolearning_fired: fired,
    })
}

use std::collections::BTreeSet;

use coinlab::agent::{self, LearnerParams, ValueTable};
use coinlab::bar::{self, BarConfig};
use coinlab::diagnostics::{self, CounterfactualMeasure};
use coinlab::leader_follower::{self as lf, LfConfig, TensorKind};
use coinlab::macrolearn::{self, AttendanceHistory};
use coinlab::worldline::{self, ClampSet, NightChoice, WeekState, WorldUtility, Worldline};
use proptest::prelude::*;

fn worldline_strategy() -> impl Strategy<Value = (usize, Worldline)> {
    (2usize..=4, 1usize..=5, 1usize..=4).prop_flat_map(|(k, n, weeks)| {
        prop::collection::vec(prop::collection::vec(0..k, n), weeks).prop_map(move |rows| {
            let weeks = rows.iter().map(|r| WeekState::from_indices(k, r).unwrap()).collect();
            (k, Worldline::new(weeks).unwrap())
        })
    })
}

fn clamp_set(w: &Worldline, mask: &[bool]) -> ClampSet {
    let n = w.nodes();
    (0..w.len() * n)
        .filter(|&i| mask.get(i).copied().unwrap_or(false))
        .map(|i| (i % n, i / n))
        .collect()
}

/// A week reward that depends on every slot, clamped ones included.
fn weighted(s: &WeekState) -> f64 {
    s.slots()
        .iter()
        .enumerate()
        .map(|(i, c)| match c {
            Some(c) => ((i + 1) * (c.index() + 2)) as f64 * 0.37,
            None => -(i as f64) * 0.11,
        })
        .sum::<f64>()
        .sin()
}

fn bar_cfg(n: usize, k: usize, c: f64, alpha: Vec<f64>) -> BarConfig {
    BarConfig::new(n, k, c, alpha).unwrap()
}

fn small_bar() -> impl Strategy<Value = (BarConfig, Vec<usize>)> {
    (1usize..=6, 1usize..=3, 0.5f64..8.0).prop_flat_map(|(n, k, c)| {
        (prop::collection::vec(0.0f64..3.0, k), prop::collection::vec(0..k, n))
            .prop_map(move |(alpha, picks)| (bar_cfg(n, k, c, alpha), picks))
    })
}

fn brute_bar_optimum(cfg: &BarConfig) -> f64 {
    let n = cfg.agents;
    let k = cfg.nights;
    let mut best = f64::MIN;
    let mut digits = vec![0usize; n];
    for _ in 0..k.pow(n as u32) {
        let s = WeekState::from_indices(k, &digits).unwrap();
        best = best.max(bar::world_reward(&s, cfg));
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clamp_is_idempotent((_, w) in worldline_strategy(), mask in prop::collection::vec(any::<bool>(), 20)) {
        let sigma = clamp_set(&w, &mask);
        let once = worldline::clamp(&w, &sigma).unwrap();
        let twice = worldline::clamp(&once, &sigma).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn disjoint_clamps_commute(
        (_, w) in worldline_strategy(),
        mask in prop::collection::vec(0u8..3, 20),
    ) {
        let a = clamp_set(&w, &mask.iter().map(|&m| m == 1).collect::<Vec<_>>());
        let b = clamp_set(&w, &mask.iter().map(|&m| m == 2).collect::<Vec<_>>());
        prop_assert!(a.is_disjoint(&b));
        let ab = worldline::clamp(&worldline::clamp(&w, &a).unwrap(), &b).unwrap();
        let ba = worldline::clamp(&worldline::clamp(&w, &b).unwrap(), &a).unwrap();
        let union: ClampSet = a.iter().chain(b.iter()).collect();
        prop_assert_eq!(&ab, &ba);
        prop_assert_eq!(ab, worldline::clamp(&w, &union).unwrap());
    }

    #[test]
    fn wlu_ignores_constant_offsets(
        (_, w) in worldline_strategy(),
        mask in prop::collection::vec(any::<bool>(), 20),
        offset in -50.0f64..50.0,
    ) {
        let sigma = clamp_set(&w, &mask);
        let g = WorldUtility::new(weighted);
        let shifted = WorldUtility::new(move |s: &WeekState| weighted(s) + offset);
        let a = worldline::wlu(&g, &sigma, &w).unwrap();
        let b = worldline::wlu(&shifted, &sigma, &w).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + offset.abs()));
        prop_assert_eq!(worldline::wlu(&g, &ClampSet::new(), &w).unwrap(), 0.0);
    }

    #[test]
    fn world_utility_adds_over_weeks((_, w) in worldline_strategy(), at in 0usize..5) {
        let at = at.min(w.len());
        let g = WorldUtility::new(weighted);
        let (head, tail) = w.split_at(at);
        let whole = g.evaluate(&w);
        prop_assert!((whole - g.evaluate(&head) - g.evaluate(&tail)).abs() <= 1e-12 * (1.0 + whole.abs()));
    }

    #[test]
    fn ud_rewards_sum_to_world_reward((cfg, picks) in small_bar()) {
        let s = WeekState::from_indices(cfg.nights, &picks).unwrap();
        let total: f64 = (0..picks.len()).map(|n| bar::reward_ud(n, &s, &cfg).unwrap()).sum();
        prop_assert!((total - bar::world_reward(&s, &cfg)).abs() <= 1e-12);
    }

    #[test]
    fn wl_direct_matches_clamp((cfg, picks) in small_bar(), node in 0usize..6) {
        let node = node % picks.len();
        let s = WeekState::from_indices(cfg.nights, &picks).unwrap();
        let direct = bar::reward_wl(node, &s, &cfg).unwrap();
        let clamped = bar::reward_wl_clamped(node, &s, &cfg).unwrap();
        let d = picks[node];
        let x = picks.iter().filter(|&&p| p == d).count() as f64;
        let oracle = cfg.alpha[d] * (x * (-x / cfg.capacity).exp() - (x - 1.0) * (-(x - 1.0) / cfg.capacity).exp());
        prop_assert!((direct - clamped).abs() <= 1e-12);
        prop_assert!((direct - oracle).abs() <= 1e-12);
    }

    #[test]
    fn bar_optimum_matches_brute_force(n in 1usize..=5, k in 2usize..=3, c in 0.5f64..6.0, alpha in prop::collection::vec(0.0f64..3.0, 3)) {
        let cfg = bar_cfg(n, k, c, alpha[..k].to_vec());
        let (best, profile) = bar::optimum(&cfg);
        prop_assert!((best - brute_bar_optimum(&cfg)).abs() <= 1e-12);
        prop_assert_eq!(profile.total(), n);
        prop_assert!((bar::world_reward_of_profile(&profile, &cfg) - best).abs() <= 1e-12);
    }

    #[test]
    fn boltzmann_is_a_shift_invariant_distribution(
        values in prop::collection::vec(-20.0f64..20.0, 1..8),
        shift in -100.0f64..100.0,
        t in 0.01f64..10.0,
    ) {
        let p = agent::boltzmann_probabilities(&ValueTable::from_values(values.clone()).unwrap(), t).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let q = agent::boltzmann_probabilities(&ValueTable::from_values(shifted).unwrap(), t).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn update_contracts_toward_reward(
        values in prop::collection::vec(-20.0f64..20.0, 1..8),
        night in 0usize..8,
        reward in -20.0f64..20.0,
        lr in 0.001f64..=1.0,
    ) {
        let k = values.len();
        let night = NightChoice::new(night % k, k).unwrap();
        let v = ValueTable::from_values(values).unwrap();
        let next = agent::update(&v, night, reward, lr).unwrap();
        let i = night.index();
        let before = (v.as_slice()[i] - reward).abs();
        let after = (next.as_slice()[i] - reward).abs();
        prop_assert!((after - (1.0 - lr) * before).abs() <= 1e-12 * (1.0 + before));
        for j in (0..k).filter(|&j| j != i) {
            prop_assert_eq!(v.as_slice()[j], next.as_slice()[j]);
        }
    }

    #[test]
    fn temperature_is_monotone_and_floored(w1 in 0usize..5000, w2 in 0usize..5000) {
        let p = LearnerParams::default();
        let (lo, hi) = (w1.min(w2), w1.max(w2));
        prop_assert!(agent::temperature(hi, &p) <= agent::temperature(lo, &p));
        prop_assert!(agent::temperature(hi, &p) >= p.temp_floor);
    }

    #[test]
    fn intelligence_is_invariant_under_monotone_maps((cfg, picks) in small_bar(), node in 0usize..6, a in 0.1f64..5.0, b in -5.0f64..5.0) {
        let node = node % picks.len();
        let s = WeekState::from_indices(cfg.nights, &picks).unwrap();
        let u = |n: usize, s: &WeekState| bar::reward_wl(n, s, &cfg).unwrap();
        let v = |n: usize, s: &WeekState| (a * u(n, s) + b).exp();
        let m = CounterfactualMeasure::Exhaustive;
        let x = diagnostics::intelligence(&u, &s, node, m).unwrap();
        let y = diagnostics::intelligence(&v, &s, node, m).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!(x >= 1.0 / cfg.nights as f64 && x <= 1.0);
    }

    #[test]
    fn factoredness_is_invariant_under_monotone_maps((cfg, picks) in small_bar(), a in 0.1f64..5.0) {
        let s = WeekState::from_indices(cfg.nights, &picks).unwrap();
        let world = |_: usize, s: &WeekState| bar::world_reward(s, &cfg);
        let ud = |n: usize, s: &WeekState| bar::reward_ud(n, s, &cfg).unwrap();
        let ud_mapped = |n: usize, s: &WeekState| (a * ud(n, s)).exp();
        let m = CounterfactualMeasure::Exhaustive;
        let states = [s];
        if cfg.nights > 1 {
            let x = diagnostics::factoredness_degree(&world, &ud, &states, m).unwrap();
            let y = diagnostics::factoredness_degree(&world, &ud_mapped, &states, m).unwrap();
            prop_assert_eq!(x, y);
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn learnability_is_affine_invariant((cfg, picks) in small_bar(), a in 0.1f64..5.0, b in -5.0f64..5.0) {
        prop_assume!(picks.len() >= 2 && cfg.nights >= 2);
        let s = WeekState::from_indices(cfg.nights, &picks).unwrap();
        let u = |_: usize, s: &WeekState| bar::world_reward(s, &cfg);
        let v = |n: usize, s: &WeekState| a * u(n, s) + b;
        let m = CounterfactualMeasure::Exhaustive;
        let x = diagnostics::learnability(&u, &s, 0, m).unwrap();
        let y = diagnostics::learnability(&v, &s, 0, m).unwrap();
        prop_assert_eq!(x.is_finite(), y.is_finite());
        if x.is_finite() {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn correlation_matrix_is_symmetric(rows in prop::collection::vec(prop::collection::vec(0usize..4, 5), 2..30)) {
        let h = AttendanceHistory::from_rows(rows).unwrap();
        let c = macrolearn::estimate_correlations(&h).unwrap();
        for i in 0..c.len() {
            for j in 0..c.len() {
                prop_assert_eq!(c.get(i, j), c.get(j, i));
                prop_assert!(c.get(i, j).abs() <= 1.0 + 1e-12);
            }
        }
        let sets = macrolearn::reassign_effect_sets(&c).unwrap();
        for i in 0..c.len() {
            prop_assert!(sets.get(i).contains(&i));
            prop_assert_eq!(sets.get(i).len(), 3);
        }
    }

    #[test]
    fn dynamics_are_idempotent(leaders in 1usize..5, k in 2usize..5, seed in any::<u64>()) {
        let cfg = LfConfig { num_leaders: leaders, nights: k, tensor: TensorKind::WorstCase, penalty: 2.0 };
        let picks: Vec<usize> = (0..cfg.agents()).map(|i| (seed.rotate_left(i as u32 * 7) % k as u64) as usize).collect();
        let s = WeekState::from_indices(k, &picks).unwrap();
        let once = lf::apply_dynamics(&s, &cfg).unwrap();
        prop_assert_eq!(&lf::apply_dynamics(&once, &cfg).unwrap(), &once);
        for i in 0..leaders {
            let l = once.choice(lf::leader_agent(i));
            for f in lf::followers(i) {
                prop_assert_eq!(once.choice(f), l);
            }
        }
    }

    #[test]
    fn local_wl_matches_clamp_form(leaders in 1usize..4, k in 2usize..4, seed in any::<u64>(), members in prop::collection::btree_set(0usize..12, 1..4)) {
        let cfg = LfConfig { num_leaders: leaders, nights: k, tensor: TensorKind::Random, penalty: 2.0 };
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let tensor = lf::random_tensor(k, &mut rng).unwrap();
        let n = cfg.agents();
        let picks: Vec<usize> = (0..n).map(|i| (seed.rotate_left(i as u32 * 5) % k as u64) as usize).collect();
        let att = lf::apply_dynamics(&WeekState::from_indices(k, &picks).unwrap(), &cfg).unwrap();
        let mut sets = lf::GuessedEffectSets::singletons(n);
        let mut m: BTreeSet<usize> = members.into_iter().map(|x| x % n).collect();
        m.insert(0);
        sets.set(0, m).unwrap();
        for agent in 0..n {
            let a = lf::reward_wl_lf(agent, &att, &sets, &tensor, &cfg).unwrap();
            let b = lf::reward_wl_lf_clamped(agent, &att, &sets, &tensor, &cfg).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

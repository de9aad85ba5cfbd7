use std::cell::RefCell;
use std::collections::HashSet;

use gencal::events::synth_event;
use gencal::qcal::{
    best_estimate, calibrate, calibrate_event, discrepancy, select_action, Hyperparams, ParameterGrid,
    RewardConfig,
};
use gencal::{DisturbanceSpec, Event, ModelParameters, OutputTrajectory, Result};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reference_event() -> (ModelParameters, Event) {
    let p = ModelParameters::default();
    let e = synth_event(&p, &DisturbanceSpec::default(), 10.0, 30.0, 0.8, -0.2, None).unwrap();
    (p, e)
}

fn coarse_grid() -> ParameterGrid {
    // 10 x 10 cells over the reference priors.
    ParameterGrid::build(vec!["H".into(), "KA".into()], vec![2.9, 68.8], vec![8.9, 206.3], 0.05).unwrap()
}

/// Outputs whose discrepancy from zero is the L1 distance to `target`.
fn bowl(target: Vec<f64>) -> impl Fn(&[f64]) -> Result<OutputTrajectory> {
    move |x: &[f64]| {
        let d: f64 = x.iter().zip(&target).map(|(a, b)| (a - b).abs()).sum();
        Ok(OutputTrajectory {
            p_model: vec![d, d],
            q_model: vec![d, d],
        })
    }
}

fn zeros() -> OutputTrajectory {
    OutputTrajectory {
        p_model: vec![0.0; 2],
        q_model: vec![0.0; 2],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn each_state_is_simulated_at_most_once(
        seed in any::<u64>(),
        epsilon in 0.0f64..=1.0,
        episodes in 1usize..60,
        tx in 0.0f64..1.0,
        ty in 0.0f64..1.0,
    ) {
        let grid = ParameterGrid::build(vec!["x".into(), "y".into()], vec![0.0; 2], vec![1.0; 2], 0.05).unwrap();
        let calls = RefCell::new(Vec::new());
        let inner = bowl(vec![tx, ty]);
        let model = |x: &[f64]| {
            calls.borrow_mut().push(x.to_vec());
            inner(x)
        };
        let hyper = Hyperparams { seed, epsilon, n_episodes: episodes, max_steps_per_episode: 20, ..Hyperparams::default() };
        let cfg = RewardConfig { eps_low: 0.02, eps_high: 0.5 };
        let cal = calibrate(&grid, &model, &zeros(), &hyper, &cfg, None).unwrap();
        let calls = calls.into_inner();
        let distinct: HashSet<Vec<u64>> = calls.iter().map(|v| v.iter().map(|x| x.to_bits()).collect()).collect();
        prop_assert_eq!(distinct.len(), calls.len());
        prop_assert_eq!(cal.result.model_evaluations, calls.len() as u64);
        prop_assert_eq!(cal.result.model_evaluations, cal.pool.searched_count());
    }

    #[test]
    fn q_values_stay_within_the_discounted_reward_range(
        seed in any::<u64>(),
        gamma in 0.5f64..0.99,
        lambda in 0.05f64..1.0,
        tx in 0.0f64..1.0,
    ) {
        let grid = ParameterGrid::build(vec!["x".into(), "y".into()], vec![0.0; 2], vec![1.0; 2], 0.05).unwrap();
        let hyper = Hyperparams { seed, gamma, lambda, n_episodes: 80, max_steps_per_episode: 30, ..Hyperparams::default() };
        // Thresholds chosen so all three reward branches occur.
        let cfg = RewardConfig { eps_low: 0.03, eps_high: 0.3 };
        let cal = calibrate(&grid, &bowl(vec![tx, 0.5]), &zeros(), &hyper, &cfg, None).unwrap();
        let rewards: Vec<f64> = cal.pool.entries().iter().map(|(_, e)| e.reward).collect();
        let r_min = rewards.iter().copied().fold(0.0, f64::min);
        let r_max = rewards.iter().copied().fold(0.0, f64::max);
        let (lo, hi) = (r_min / (1.0 - gamma), r_max / (1.0 - gamma));
        for (_, _, q) in cal.qtable.entries() {
            prop_assert!(q >= lo - 1e-9 && q <= hi + 1e-9, "{q} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical(seed in any::<u64>(), tx in 0.0f64..1.0) {
        let grid = ParameterGrid::build(vec!["x".into(), "y".into()], vec![0.0; 2], vec![1.0; 2], 0.02).unwrap();
        let hyper = Hyperparams { seed, n_episodes: 50, ..Hyperparams::default() };
        let cfg = RewardConfig { eps_low: 0.02, eps_high: 0.5 };
        let a = calibrate(&grid, &bowl(vec![tx, 0.3]), &zeros(), &hyper, &cfg, None).unwrap();
        let b = calibrate(&grid, &bowl(vec![tx, 0.3]), &zeros(), &hyper, &cfg, None).unwrap();
        prop_assert_eq!(&a.result, &b.result);
        prop_assert_eq!(a.qtable.entries(), b.qtable.entries());
        prop_assert_eq!(a.pool.entries(), b.pool.entries());
    }
}

#[test]
fn playback_calibration_is_deterministic() {
    let (p, e) = reference_event();
    let grid = coarse_grid();
    let hyper = Hyperparams { seed: 11, n_episodes: 60, ..Hyperparams::default() };
    let a = calibrate_event(&grid, &p, &e, &hyper, &RewardConfig::default(), None).unwrap();
    let b = calibrate_event(&grid, &p, &e, &hyper, &RewardConfig::default(), None).unwrap();
    assert_eq!(a.result, b.result);
    assert_eq!(a.qtable.to_csv(), b.qtable.to_csv());
    assert_eq!(a.pool.to_csv(), b.pool.to_csv());
}

#[test]
fn full_exploration_matches_exhaustive_search() {
    let (p, e) = reference_event();
    let grid = coarse_grid();
    assert!(grid.n_states <= 200);
    let hyper = Hyperparams { epsilon: 1.0, n_episodes: 400, seed: 5, ..Hyperparams::default() };
    let cal = calibrate_event(&grid, &p, &e, &hyper, &RewardConfig::default(), None).unwrap();
    assert_eq!(cal.pool.searched_count(), grid.n_states);

    let z_star = e.measured();
    let mut best = (f64::INFINITY, Vec::new());
    for i in 0..10 {
        for j in 0..10 {
            let h = 2.9 + (i as f64 + 0.5) * 0.6;
            let ka = 68.8 + (j as f64 + 0.5) * 13.75;
            let mut q = p;
            q.machine.h = h;
            q.exciter.ka = ka;
            let eps = discrepancy(&e.replay(&q).unwrap(), &z_star).unwrap();
            if eps < best.0 {
                best = (eps, vec![h, ka]);
            }
        }
    }
    let (_, estimate) = best_estimate(&grid, &cal.pool).unwrap();
    assert!((estimate[0] - best.1[0]).abs() < 1e-9 && (estimate[1] - best.1[1]).abs() < 1e-9);
    assert!((cal.result.best_eps - best.0).abs() <= 1e-12 * best.0.max(1e-300));
}

#[test]
fn greedy_policy_reaches_the_terminal_state_after_training() {
    // Target at a cell center so the grid holds a terminal state.
    let grid = ParameterGrid::build(vec!["x".into(), "y".into()], vec![0.0; 2], vec![1.0; 2], 0.05).unwrap();
    assert!(grid.n_states <= 100);
    let model = bowl(vec![0.65, 0.25]);
    let cfg = RewardConfig { eps_low: 0.01, eps_high: 2.0 };
    let hyper = Hyperparams { seed: 3, n_episodes: 2000, ..Hyperparams::default() };
    let cal = calibrate(&grid, &model, &zeros(), &hyper, &cfg, None).unwrap();
    assert!(cal.result.episodes_to_terminal.is_some());

    let n = grid.n_states;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (start, entry) in cal.pool.entries() {
        if entry.is_failed() {
            continue;
        }
        let mut state = grid.state_from_linear(start).unwrap();
        let mut visits = vec![0u64; n as usize];
        loop {
            let lin = grid.linear_index(&state);
            if cal.pool.get(lin).is_some_and(|e| e.eps_s < cfg.eps_low) {
                break;
            }
            visits[lin as usize] += 1;
            assert!(visits[lin as usize] <= n, "greedy walk from {start} cycles at {lin}");
            let action = select_action(&cal.qtable, lin, 0.0, &mut rng);
            state = grid.apply_action(&state, action);
        }
    }
}

#[test]
fn warm_table_from_another_grid_is_rejected() {
    let (p, e) = reference_event();
    let hyper = Hyperparams { n_episodes: 3, ..Hyperparams::default() };
    let cal = calibrate_event(&coarse_grid(), &p, &e, &hyper, &RewardConfig::default(), None).unwrap();
    let other = ParameterGrid::build(vec!["H".into(), "KA".into()], vec![2.9, 68.8], vec![8.9, 206.3], 0.01).unwrap();
    let warm = gencal::qcal::WarmStart { qtable: cal.qtable, pool: None };
    let err = calibrate_event(&other, &p, &e, &hyper, &RewardConfig::default(), Some(warm)).unwrap_err();
    assert!(matches!(err, gencal::Error::Shape(_)));
}

#[test]
fn truth_on_cell_centers_is_recovered_exactly() {
    let (p, e) = reference_event();
    // 5.4 and 125 sit on the centers of cell 20 of each 50-cell axis.
    let grid = ParameterGrid::build(
        vec!["H".into(), "KA".into()],
        vec![5.4 - 20.5 * 0.12, 125.0 - 20.5 * 2.75],
        vec![5.4 + 29.5 * 0.12, 125.0 + 29.5 * 2.75],
        0.01,
    )
    .unwrap();
    let cal = calibrate_event(&grid, &p, &e, &Hyperparams::default(), &RewardConfig::default(), None).unwrap();
    assert!(cal.result.best_eps < RewardConfig::default().eps_low);
    assert!((cal.result.estimate[0] - 5.4).abs() < 1e-9, "{:?}", cal.result.estimate);
    assert!((cal.result.estimate[1] - 125.0).abs() < 1e-9, "{:?}", cal.result.estimate);
}

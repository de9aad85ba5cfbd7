//! The learning loop: epsilon-greedy action selection, temporal-difference
//! updates and cached state evaluation over a [`ParameterGrid`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{ActionId, GridState, ParameterGrid};
use super::reward::{discrepancy, reward, RewardConfig};
use super::table::{ExperiencePool, PoolEntry, QTable};
use crate::error::{Error, ErrorKind, Result};
use crate::events::Event;
use crate::model::OutputTrajectory;
use crate::params::ModelParameters;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub gamma: f64,
    pub lambda: f64,
    /// Exploration rate; the starting rate when `epsilon_min` is set.
    pub epsilon: f64,
    /// If set, epsilon decays linearly to this value over the episodes.
    pub epsilon_min: Option<f64>,
    pub n_episodes: usize,
    pub max_steps_per_episode: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            lambda: 0.3,
            epsilon: 0.2,
            epsilon_min: None,
            n_episodes: 2000,
            max_steps_per_episode: 50,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidHyperparameter(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        for e in std::iter::once(self.epsilon).chain(self.epsilon_min) {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("epsilon must lie in [0, 1], got {e}"));
            }
        }
        if self.n_episodes == 0 {
            return Err(Error::NoEpisodes);
        }
        Ok(())
    }

    /// Exploration rate for a zero-based episode index.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        match self.epsilon_min {
            None => self.epsilon,
            Some(_) if self.n_episodes <= 1 => self.epsilon,
            Some(end) => {
                let frac = episode as f64 / (self.n_episodes - 1) as f64;
                self.epsilon + (end - self.epsilon) * frac
            }
        }
    }
}

/// Source of model outputs for a vector of calibrated parameter values.
pub trait CalibrationModel {
    fn simulate(&self, values: &[f64]) -> Result<OutputTrajectory>;
}

impl<F> CalibrationModel for F
where
    F: Fn(&[f64]) -> Result<OutputTrajectory>,
{
    fn simulate(&self, values: &[f64]) -> Result<OutputTrajectory> {
        self(values)
    }
}

/// Plays an event back with the calibrated parameters substituted into a
/// base parameter set.
#[derive(Debug, Clone)]
pub struct PlaybackModel<'a> {
    pub base: ModelParameters,
    pub names: Vec<String>,
    pub event: &'a Event,
}

impl CalibrationModel for PlaybackModel<'_> {
    fn simulate(&self, values: &[f64]) -> Result<OutputTrajectory> {
        let params = self.base.with_values(&self.names, values)?;
        self.event.replay(&params)
    }
}

/// Epsilon-greedy choice; greedy ties go to the lowest action index.
pub fn select_action<R: Rng + ?Sized>(qtable: &QTable, state: u64, epsilon: f64, rng: &mut R) -> ActionId {
    let n = qtable.n_actions();
    if rng.gen::<f64>() < epsilon {
        return ActionId::from_index(rng.gen_range(0..n));
    }
    let row = qtable.row(state);
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    ActionId::from_index(best)
}

/// `Q(s,a) <- (1-lambda) Q(s,a) + lambda (r + gamma max_a' Q(s',a'))`,
/// saturated to the finite range.
pub fn q_update(
    qtable: &mut QTable,
    s: u64,
    a: ActionId,
    s_next: u64,
    r: f64,
    lambda: f64,
    gamma: f64,
) {
    if lambda == 0.0 {
        return;
    }
    let old = qtable.get(s, a.index());
    let target = lambda * r + lambda * gamma * qtable.max(s_next);
    let value = ((1.0 - lambda) * old + target).clamp(f64::MIN, f64::MAX);
    qtable.set(s, a.index(), if value.is_nan() { f64::MIN } else { value });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub reward: f64,
    pub eps_s: f64,
    /// Whether this call ran the model (false on a cache hit).
    pub fresh: bool,
}

/// Reward and discrepancy of a state, running the model only on first visit.
/// States whose playback fails are cached with the failure sentinel.
pub fn evaluate_state<M: CalibrationModel + ?Sized>(
    grid: &ParameterGrid,
    state: &GridState,
    pool: &mut ExperiencePool,
    model: &M,
    z_star: &OutputTrajectory,
    config: &RewardConfig,
) -> Result<Evaluation> {
    let lin = grid.linear_index(state);
    if let Some(e) = pool.get(lin) {
        return Ok(Evaluation {
            reward: e.reward,
            eps_s: e.eps_s,
            fresh: false,
        });
    }
    let values = grid.state_to_params(state)?;
    let entry = match model.simulate(&values) {
        Ok(z) => {
            let eps_s = discrepancy(&z, z_star)?;
            PoolEntry {
                eps_s,
                reward: reward(eps_s, config)?,
            }
        }
        Err(e) if e.kind() != ErrorKind::Config => PoolEntry::failed(),
        Err(e) => return Err(e),
    };
    pool.insert(lin, entry);
    Ok(Evaluation {
        reward: entry.reward,
        eps_s: entry.eps_s,
        fresh: true,
    })
}

/// Searched, non-failed state with the smallest discrepancy; ties go to the
/// lowest linear index.
pub fn best_estimate(grid: &ParameterGrid, pool: &ExperiencePool) -> Result<(GridState, Vec<f64>)> {
    let mut best: Option<(u64, f64)> = None;
    for (s, e) in pool.entries() {
        if e.is_failed() {
            continue;
        }
        if best.map_or(true, |(_, b)| e.eps_s < b) {
            best = Some((s, e.eps_s));
        }
    }
    let (lin, _) = best.ok_or(Error::EmptyPool)?;
    let state = grid.state_from_linear(lin)?;
    let values = grid.state_to_params(&state)?;
    Ok((state, values))
}

/// Learned state carried from a previous calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub qtable: QTable,
    /// Only valid when calibrating against the same measurements.
    pub pool: Option<ExperiencePool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub best_state: GridState,
    pub estimate: Vec<f64>,
    pub best_eps: f64,
    /// Cumulative reward of each episode.
    pub reward_history: Vec<f64>,
    /// One-based index of the first episode that reached a terminal state.
    pub episodes_to_terminal: Option<usize>,
    /// Playback runs performed by this calibration.
    pub model_evaluations: u64,
}

/// Result plus the learned table and pool (for dumps and warm starts).
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub result: CalibrationResult,
    pub qtable: QTable,
    pub pool: ExperiencePool,
}

fn pick_start(grid: &ParameterGrid, pool: &ExperiencePool, rng: &mut ChaCha8Rng) -> Result<GridState> {
    let n = grid.n_states;
    if pool.searched_count() >= n {
        return grid.state_from_linear(rng.gen_range(0..n));
    }
    for _ in 0..64 {
        let s = rng.gen_range(0..n);
        if !pool.is_searched(s) {
            return grid.state_from_linear(s);
        }
    }
    let free: Vec<u64> = (0..n).filter(|s| !pool.is_searched(*s)).collect();
    grid.state_from_linear(free[rng.gen_range(0..free.len())])
}

/// Tabular Q-learning search for the grid state that best reproduces `z_star`.
///
/// Each episode starts from a random un-searched state and walks at most
/// `max_steps_per_episode` steps, stopping early on a terminal state
/// (`eps_s < eps_low`). Rewards are those of the post-action state.
pub fn calibrate<M: CalibrationModel + ?Sized>(
    grid: &ParameterGrid,
    model: &M,
    z_star: &OutputTrajectory,
    hyper: &Hyperparams,
    config: &RewardConfig,
    warm: Option<WarmStart>,
) -> Result<Calibration> {
    hyper.validate()?;
    config.validate()?;
    if z_star.len() < 2 {
        return Err(Error::EmptyEvent(z_star.len()));
    }
    let (mut qtable, mut pool) = match warm {
        Some(w) => {
            w.qtable.check_shape(grid.n_states, grid.n_actions())?;
            let pool = match w.pool {
                Some(p) if p.n_states() == grid.n_states => p,
                Some(p) => {
                    return Err(Error::Shape(format!(
                        "pool covers {} states, grid has {}",
                        p.n_states(),
                        grid.n_states
                    )))
                }
                None => ExperiencePool::new(grid.n_states),
            };
            (w.qtable, pool)
        }
        None => (
            QTable::zeros(grid.n_states, grid.n_actions()),
            ExperiencePool::new(grid.n_states),
        ),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut evaluations = 0u64;
    let mut history = Vec::with_capacity(hyper.n_episodes);
    let mut first_terminal = None;

    for episode in 0..hyper.n_episodes {
        let epsilon = hyper.epsilon_at(episode);
        let mut state = pick_start(grid, &pool, &mut rng)?;
        let mut lin = grid.linear_index(&state);
        let ev = evaluate_state(grid, &state, &mut pool, model, z_star, config)?;
        evaluations += u64::from(ev.fresh);
        let mut total = ev.reward;
        let mut terminal = ev.eps_s < config.eps_low;

        let mut steps = 0;
        while !terminal && steps < hyper.max_steps_per_episode {
            let action = select_action(&qtable, lin, epsilon, &mut rng);
            let next = grid.apply_action(&state, action);
            let next_lin = grid.linear_index(&next);
            let ev = evaluate_state(grid, &next, &mut pool, model, z_star, config)?;
            evaluations += u64::from(ev.fresh);
            q_update(&mut qtable, lin, action, next_lin, ev.reward, hyper.lambda, hyper.gamma);
            total = (total + ev.reward).max(f64::MIN);
            terminal = ev.eps_s < config.eps_low;
            state = next;
            lin = next_lin;
            steps += 1;
        }
        history.push(total);
        if terminal && first_terminal.is_none() {
            first_terminal = Some(episode + 1);
        }
    }

    let (best_state, estimate) = best_estimate(grid, &pool)?;
    let best_eps = pool
        .get(grid.linear_index(&best_state))
        .map(|e| e.eps_s)
        .expect("best state is searched");
    Ok(Calibration {
        result: CalibrationResult {
            best_state,
            estimate,
            best_eps,
            reward_history: history,
            episodes_to_terminal: first_terminal,
            model_evaluations: evaluations,
        },
        qtable,
        pool,
    })
}

/// [`calibrate`] against an event's measurements via playback.
pub fn calibrate_event(
    grid: &ParameterGrid,
    base: &ModelParameters,
    event: &Event,
    hyper: &Hyperparams,
    config: &RewardConfig,
    warm: Option<WarmStart>,
) -> Result<Calibration> {
    for name in &grid.names {
        base.get(name)?;
    }
    let model = PlaybackModel {
        base: *base,
        names: grid.names.clone(),
        event,
    };
    calibrate(grid, &model, &event.measured(), hyper, config, warm)
}

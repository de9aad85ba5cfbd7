use crate::error::{Error, Result};

/// Discretized calibration subspace. Each of the `L` dimensions is split into
/// cells of width `2 * tau * (upper - lower)`; a state maps to cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGrid {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub tau: f64,
    pub step: Vec<f64>,
    pub cells_per_dim: Vec<usize>,
    pub n_states: u64,
}

/// Integer cell coordinates, one per calibrated parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridState {
    pub index: Vec<usize>,
}

impl GridState {
    pub fn new(index: Vec<usize>) -> Self {
        Self { index }
    }
}

/// Move one cell up or down along one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionId {
    pub dim: usize,
    pub direction: i8,
}

impl ActionId {
    /// Actions are numbered `2*dim` (increase) and `2*dim + 1` (decrease).
    pub fn from_index(index: usize) -> Self {
        Self {
            dim: index / 2,
            direction: if index % 2 == 0 { 1 } else { -1 },
        }
    }

    pub fn index(&self) -> usize {
        2 * self.dim + usize::from(self.direction < 0)
    }
}

impl ParameterGrid {
    pub fn build(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 0.5) {
            return Err(Error::InvalidTolerance(tau));
        }
        if names.is_empty() || names.len() != lower.len() || names.len() != upper.len() {
            return Err(Error::Shape(format!(
                "{} names, {} lower bounds, {} upper bounds",
                names.len(),
                lower.len(),
                upper.len()
            )));
        }
        for ((n, &l), &u) in names.iter().zip(&lower).zip(&upper) {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidBounds {
                    name: n.clone(),
                    lower: l,
                    upper: u,
                });
            }
        }
        let step: Vec<f64> = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| 2.0 * tau * (u - l))
            .collect();
        let cells = (1.0 / (2.0 * tau)).round().max(1.0) as usize;
        let cells_per_dim = vec![cells; names.len()];
        let n_states = cells_per_dim
            .iter()
            .try_fold(1u64, |acc, &c| acc.checked_mul(c as u64))
            .ok_or_else(|| Error::Shape("state count overflows u64".into()))?;
        Ok(Self {
            names,
            lower,
            upper,
            tau,
            step,
            cells_per_dim,
            n_states,
        })
    }

    pub fn dims(&self) -> usize {
        self.names.len()
    }

    pub fn n_actions(&self) -> usize {
        2 * self.dims()
    }

    pub fn check(&self, state: &GridState) -> Result<()> {
        if state.index.len() != self.dims() {
            return Err(Error::InvalidState(format!(
                "{} coordinates for a {}-dimensional grid",
                state.index.len(),
                self.dims()
            )));
        }
        for (j, (&i, &n)) in state.index.iter().zip(&self.cells_per_dim).enumerate() {
            if i >= n {
                return Err(Error::InvalidState(format!(
                    "index {i} out of range 0..{n} for `{}`",
                    self.names[j]
                )));
            }
        }
        Ok(())
    }

    /// Cell-center parameter values of a state.
    pub fn state_to_params(&self, state: &GridState) -> Result<Vec<f64>> {
        self.check(state)?;
        Ok(state
            .index
            .iter()
            .enumerate()
            .map(|(j, &i)| self.lower[j] + (i as f64 + 0.5) * self.step[j])
            .collect())
    }

    /// Neighbor state; moves past a bound leave the state unchanged.
    pub fn apply_action(&self, state: &GridState, action: ActionId) -> GridState {
        let mut next = state.clone();
        let i = next.index[action.dim];
        if action.direction > 0 {
            if i + 1 < self.cells_per_dim[action.dim] {
                next.index[action.dim] = i + 1;
            }
        } else if i > 0 {
            next.index[action.dim] = i - 1;
        }
        next
    }

    /// Row-major linear index, first parameter most significant.
    pub fn linear_index(&self, state: &GridState) -> u64 {
        state
            .index
            .iter()
            .zip(&self.cells_per_dim)
            .fold(0u64, |acc, (&i, &n)| acc * n as u64 + i as u64)
    }

    pub fn state_from_linear(&self, mut linear: u64) -> Result<GridState> {
        if linear >= self.n_states {
            return Err(Error::InvalidState(format!(
                "linear index {linear} out of range 0..{}",
                self.n_states
            )));
        }
        let mut index = vec![0; self.dims()];
        for (slot, &n) in index.iter_mut().zip(&self.cells_per_dim).rev() {
            *slot = (linear % n as u64) as usize;
            linear /= n as u64;
        }
        Ok(GridState { index })
    }

    /// Nearest cell to a parameter vector (clamped into the grid).
    pub fn nearest_state(&self, values: &[f64]) -> GridState {
        let index = values
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let raw = ((v - self.lower[j]) / self.step[j]).floor();
                raw.clamp(0.0, (self.cells_per_dim[j] - 1) as f64) as usize
            })
            .collect();
        GridState { index }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid1(l: f64, u: f64, tau: f64) -> ParameterGrid {
        ParameterGrid::build(vec!["x".into()], vec![l], vec![u], tau).unwrap()
    }

    #[test]
    fn one_percent_of_zero_to_ten() {
        let g = grid1(0.0, 10.0, 0.01);
        assert_abs_diff_eq!(g.step[0], 0.2, epsilon = 1e-12);
        assert_eq!(g.cells_per_dim, vec![50]);
        assert_eq!(g.n_states, 50);
    }

    #[test]
    fn inertia_prior_grid() {
        let g = grid1(2.9, 8.9, 0.01);
        assert_abs_diff_eq!(g.step[0], 0.12, epsilon = 1e-12);
        assert_eq!(g.cells_per_dim, vec![50]);
    }

    #[test]
    fn half_tolerance_gives_one_cell() {
        let g = grid1(0.0, 1.0, 0.5);
        assert_eq!(g.step[0], 1.0);
        assert_eq!(g.n_states, 1);
        let v = g.state_to_params(&GridState::new(vec![0])).unwrap();
        assert_eq!(v, vec![0.5]);
    }

    #[test]
    fn bad_tolerance_and_bounds() {
        let mk = |l, u, t| ParameterGrid::build(vec!["x".into()], vec![l], vec![u], t);
        assert!(matches!(mk(0.0, 1.0, 0.0), Err(Error::InvalidTolerance(_))));
        assert!(matches!(mk(0.0, 1.0, 0.6), Err(Error::InvalidTolerance(_))));
        assert!(matches!(mk(1.0, 1.0, 0.1), Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn cell_centers() {
        let g = grid1(0.0, 10.0, 0.01);
        assert_abs_diff_eq!(g.state_to_params(&GridState::new(vec![0])).unwrap()[0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(g.state_to_params(&GridState::new(vec![24])).unwrap()[0], 4.9, epsilon = 1e-12);
        assert!(matches!(
            g.state_to_params(&GridState::new(vec![50])),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn actions_move_and_clamp() {
        let g = ParameterGrid::build(vec!["a".into(), "b".into()], vec![0.0; 2], vec![1.0; 2], 0.05).unwrap();
        let s = GridState::new(vec![3, 4]);
        let down_b = ActionId { dim: 1, direction: -1 };
        let up_a = ActionId { dim: 0, direction: 1 };
        let down_a = ActionId { dim: 0, direction: -1 };
        assert_eq!(g.apply_action(&s, down_b).index, vec![3, 3]);
        assert_eq!(g.apply_action(&s, up_a).index, vec![4, 4]);
        assert_eq!(g.apply_action(&GridState::new(vec![0, 2]), down_a).index, vec![0, 2]);
        assert_eq!(g.apply_action(&GridState::new(vec![9, 2]), up_a).index, vec![9, 2]);
    }

    #[test]
    fn action_numbering_round_trips() {
        for i in 0..8 {
            assert_eq!(ActionId::from_index(i).index(), i);
        }
    }

    #[test]
    fn linear_index_round_trips() {
        let g = ParameterGrid::build(vec!["a".into(), "b".into(), "c".into()], vec![0.0; 3], vec![1.0; 3], 0.1).unwrap();
        for lin in [0u64, 7, 42, 124] {
            let s = g.state_from_linear(lin).unwrap();
            assert_eq!(g.linear_index(&s), lin);
        }
        assert!(g.state_from_linear(125).is_err());
    }
}

//! Tabular Q-learning calibration over a discretized parameter grid.

mod agent;
mod grid;
mod reward;
mod table;

pub use agent::{
    best_estimate, calibrate, calibrate_event, evaluate_state, q_update, select_action, Calibration,
    CalibrationModel, CalibrationResult, Evaluation, Hyperparams, PlaybackModel, WarmStart,
};
pub use grid::{ActionId, GridState, ParameterGrid};
pub use reward::{discrepancy, reward, RewardConfig};
pub use table::{ExperiencePool, PoolEntry, QTable, FAILED_REWARD, POOL_HEADER, QTABLE_HEADER};

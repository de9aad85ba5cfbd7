use crate::error::{Error, Result};
use crate::model::OutputTrajectory;

/// Thresholds of the three-branch reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub eps_low: f64,
    pub eps_high: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            eps_low: 0.001,
            eps_high: 2.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_low > 0.0 && self.eps_low < self.eps_high) || !self.eps_high.is_finite() {
            return Err(Error::InvalidHyperparameter(format!(
                "reward thresholds need 0 < eps_low < eps_high, got ({}, {})",
                self.eps_low, self.eps_high
            )));
        }
        Ok(())
    }
}

/// Mean absolute error over the stacked `[P; Q]` vector.
pub fn discrepancy(z: &OutputTrajectory, z_star: &OutputTrajectory) -> Result<f64> {
    if z.p_model.len() != z.q_model.len()
        || z_star.p_model.len() != z_star.q_model.len()
        || z.len() != z_star.len()
    {
        return Err(Error::Shape(format!(
            "trajectory lengths ({}, {}) vs ({}, {})",
            z.p_model.len(),
            z.q_model.len(),
            z_star.p_model.len(),
            z_star.q_model.len()
        )));
    }
    if z.is_empty() {
        return Err(Error::EmptyEvent(0));
    }
    let l1: f64 = z.stacked().zip(z_star.stacked()).map(|(a, b)| (a - b).abs()).sum();
    Ok(l1 / (2 * z.len()) as f64)
}

/// Positive and growing below `eps_low`, zero in between, linearly negative
/// above `eps_high`. Discontinuous at `eps_low`.
pub fn reward(eps_s: f64, config: &RewardConfig) -> Result<f64> {
    if !(eps_s >= 0.0) {
        return Err(Error::NegativeDiscrepancy(eps_s));
    }
    Ok(if eps_s < config.eps_low {
        10.0 / (eps_s + 0.01)
    } else if eps_s <= config.eps_high {
        0.0
    } else {
        -10.0 * (eps_s - config.eps_high)
    })
}

//! Trajectory sensitivity of the P/Q outputs to individual parameters.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::Event;
use crate::params::ModelParameters;

pub const DEFAULT_DELTA_FRAC: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityEntry {
    pub parameter: String,
    pub sensitivity: f64,
    pub rank: usize,
}

/// Entries sorted by descending sensitivity, ranked from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub entries: Vec<SensitivityEntry>,
}

impl SensitivityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,sensitivity,rank\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.parameter, e.sensitivity, e.rank));
        }
        out
    }

    pub fn get(&self, parameter: &str) -> Option<&SensitivityEntry> {
        self.entries.iter().find(|e| e.parameter == parameter)
    }
}

/// Scaled central-difference response of the stacked `[P; Q]` output,
/// averaged over all `2K` entries:
/// `S = 1/(2K) * sum_k |a| * |z_k(a+) - z_k(a-)| / (a+ - a-)`
/// with `a± = a ± delta_frac*|a|`.
pub fn trajectory_sensitivity(
    params: &ModelParameters,
    event: &Event,
    target: &str,
    delta_frac: f64,
) -> Result<f64> {
    if !(delta_frac > 0.0) || !delta_frac.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta_frac".into(),
            reason: format!("must be positive, got {delta_frac}"),
        });
    }
    let nominal = params.get(target)?;
    if nominal == 0.0 {
        return Err(Error::ZeroNominal(target.to_string()));
    }
    let step = delta_frac * nominal.abs();
    let (plus, minus) = (nominal + step, nominal - step);
    let mut hi = *params;
    hi.set(target, plus)?;
    let mut lo = *params;
    lo.set(target, minus)?;
    let z_hi = event.replay(&hi)?;
    let z_lo = event.replay(&lo)?;

    let total: f64 = z_hi
        .stacked()
        .zip(z_lo.stacked())
        .map(|(a, b)| (a - b).abs())
        .sum();
    let s = nominal.abs() * total / ((plus - minus) * (2 * z_hi.len()) as f64);
    if !s.is_finite() {
        return Err(Error::NonFinite("sensitivity"));
    }
    Ok(s)
}

/// Sensitivities of all candidates, sorted descending; ties keep candidate order.
pub fn rank_parameters(
    params: &ModelParameters,
    event: &Event,
    candidates: &[String],
    delta_frac: f64,
) -> Result<SensitivityReport> {
    if candidates.is_empty() {
        return Err(Error::Usage("no sensitivity candidates given".into()));
    }
    let values = candidates
        .par_iter()
        .map(|c| trajectory_sensitivity(params, event, c, delta_frac))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(i, idx)| SensitivityEntry {
            parameter: candidates[idx].clone(),
            sensitivity: values[idx],
            rank: i + 1,
        })
        .collect();
    Ok(SensitivityReport { entries })
}

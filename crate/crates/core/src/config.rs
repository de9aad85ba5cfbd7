//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments run to end of line
//! model.H = 5.4
//! grid.names = H, KA
//! grid.tau = 0.01
//! grid.H.lower = 2.9
//! grid.H.upper = 8.9
//! grid.KA.mean = 137.5      # or a mean with a +/- percent spread
//! grid.KA.percent = 50
//! grid.KA.true = 125        # optional, reported in estimate.csv
//! hyper.episodes = 2000
//! reward.eps_low = 0.001
//! event.kind = voltage-dip
//! paths.out_dir = out
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::events::{DisturbanceKind, DisturbanceSpec, NoiseSpec};
use crate::params::{ModelParameters, PARAMETER_NAMES};
use crate::qcal::{Hyperparams, ParameterGrid, RewardConfig};
use crate::sensitivity::DEFAULT_DELTA_FRAC;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Known true values, for error reporting only.
    pub truth: Vec<Option<f64>>,
    pub tau: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            names: vec!["H".into(), "KA".into()],
            lower: vec![2.9, 68.8],
            upper: vec![8.9, 206.3],
            truth: vec![None, None],
            tau: 0.01,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<ParameterGrid> {
        ParameterGrid::build(self.names.clone(), self.lower.clone(), self.upper.clone(), self.tau)
    }
}

/// Synthetic event settings used by `gen-event`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventConfig {
    pub disturbance: DisturbanceSpec,
    /// Record length in seconds.
    pub length: f64,
    /// Samples per second.
    pub rate: f64,
    pub p0: f64,
    pub q0: f64,
    pub noise: Option<NoiseSpec>,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            disturbance: DisturbanceSpec::default(),
            length: 10.0,
            rate: 30.0,
            p0: 0.8,
            q0: -0.2,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankConfig {
    pub candidates: Vec<String>,
    pub delta_frac: f64,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self {
            candidates: ["KA", "TB", "a23", "Tdo_t"].map(String::from).to_vec(),
            delta_frac: DEFAULT_DELTA_FRAC,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub event: Option<PathBuf>,
    pub qtable_in: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub model: ModelParameters,
    pub grid: GridConfig,
    pub hyper: Hyperparams,
    pub reward: RewardConfig,
    pub event: EventConfig,
    pub rank: RankConfig,
    pub paths: Paths,
}

#[derive(Default)]
struct Prior {
    lower: Option<f64>,
    upper: Option<f64>,
    mean: Option<f64>,
    percent: Option<f64>,
    truth: Option<f64>,
    line: usize,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut grid_names: Option<(Vec<String>, usize)> = None;
        let mut priors: HashMap<String, Prior> = HashMap::new();
        let mut noise_sigma = None;
        let mut noise_seed = 0;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(Error::Config {
                    line,
                    msg: format!("`{key}` already set on line {first}"),
                });
            }
            let num = || parse_num(line, key, value);
            let int = || {
                value.parse::<u64>().map_err(|_| Error::Config {
                    line,
                    msg: format!("`{key}` expects a non-negative integer, got `{value}`"),
                })
            };

            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["model", name] => cfg.model.set(name, num()?).map_err(|e| Error::Config {
                    line,
                    msg: e.to_string(),
                })?,
                ["grid", "names"] => grid_names = Some((split_list(value), line)),
                ["grid", "tau"] => cfg.grid.tau = num()?,
                ["grid", name, field] => {
                    let p = priors.entry(name.to_string()).or_default();
                    p.line = line;
                    let v = Some(num()?);
                    match *field {
                        "lower" => p.lower = v,
                        "upper" => p.upper = v,
                        "mean" => p.mean = v,
                        "percent" => p.percent = v,
                        "true" => p.truth = v,
                        _ => return Err(unknown(line, key)),
                    }
                }
                ["hyper", field] => match *field {
                    "gamma" => cfg.hyper.gamma = num()?,
                    "lambda" => cfg.hyper.lambda = num()?,
                    "epsilon" => cfg.hyper.epsilon = num()?,
                    "epsilon_min" => cfg.hyper.epsilon_min = Some(num()?),
                    "episodes" => cfg.hyper.n_episodes = int()? as usize,
                    "max_steps" => cfg.hyper.max_steps_per_episode = int()? as usize,
                    "seed" => cfg.hyper.seed = int()?,
                    _ => return Err(unknown(line, key)),
                },
                ["reward", field] => match *field {
                    "eps_low" => cfg.reward.eps_low = num()?,
                    "eps_high" => cfg.reward.eps_high = num()?,
                    _ => return Err(unknown(line, key)),
                },
                ["event", field] => match *field {
                    "kind" => {
                        cfg.event.disturbance.kind = value.parse::<DisturbanceKind>().map_err(|e| Error::Config {
                            line,
                            msg: format!("event.kind: {e}"),
                        })?
                    }
                    "magnitude" => cfg.event.disturbance.magnitude = num()?,
                    "start" => cfg.event.disturbance.start = num()?,
                    "duration" => cfg.event.disturbance.duration = num()?,
                    "length" => cfg.event.length = num()?,
                    "rate" => cfg.event.rate = num()?,
                    "p0" => cfg.event.p0 = num()?,
                    "q0" => cfg.event.q0 = num()?,
                    _ => return Err(unknown(line, key)),
                },
                ["noise", "sigma"] => noise_sigma = Some(num()?),
                ["noise", "seed"] => noise_seed = int()?,
                ["rank", "candidates"] => cfg.rank.candidates = split_list(value),
                ["rank", "delta_frac"] => cfg.rank.delta_frac = num()?,
                ["paths", field] => {
                    let p = Some(PathBuf::from(value));
                    match *field {
                        "event" => cfg.paths.event = p,
                        "qtable_in" => cfg.paths.qtable_in = p,
                        "out_dir" => cfg.paths.out_dir = p,
                        _ => return Err(unknown(line, key)),
                    }
                }
                _ => return Err(unknown(line, key)),
            }
        }

        if let Some(sigma) = noise_sigma {
            cfg.event.noise = Some(NoiseSpec {
                sigma_pq: sigma,
                seed: noise_seed,
            });
        }
        if grid_names.is_some() || !priors.is_empty() {
            cfg.grid = resolve_grid(grid_names, priors, cfg.grid.tau)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block; the grid must also build.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.grid.build()?;
        self.hyper.validate()?;
        self.reward.validate()?;
        self.event.disturbance.validate()?;
        for name in self.rank.candidates.iter().chain(&self.grid.names) {
            self.model.get(name)?;
        }
        Ok(())
    }
}

fn resolve_grid(
    names: Option<(Vec<String>, usize)>,
    mut priors: HashMap<String, Prior>,
    tau: f64,
) -> Result<GridConfig> {
    let (names, names_line) = names.ok_or_else(|| Error::Config {
        line: priors.values().map(|p| p.line).min().unwrap_or(0),
        msg: "grid priors given without `grid.names`".into(),
    })?;
    if names.is_empty() {
        return Err(Error::Config {
            line: names_line,
            msg: "`grid.names` is empty".into(),
        });
    }
    let mut grid = GridConfig {
        names: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        truth: Vec::new(),
        tau,
    };
    for name in &names {
        if !PARAMETER_NAMES.contains(&name.as_str()) {
            return Err(Error::Config {
                line: names_line,
                msg: format!("unknown parameter `{name}` in grid.names"),
            });
        }
        let p = priors.remove(name).ok_or_else(|| Error::Config {
            line: names_line,
            msg: format!("no prior given for `{name}`"),
        })?;
        let (lower, upper) = match (p.lower, p.upper, p.mean, p.percent) {
            (Some(l), Some(u), None, None) => (l, u),
            (None, None, Some(m), Some(pct)) => {
                let half = m.abs() * pct / 100.0;
                (m - half, m + half)
            }
            _ => {
                return Err(Error::Config {
                    line: p.line,
                    msg: format!("`{name}` needs either lower/upper or mean/percent"),
                })
            }
        };
        grid.names.push(name.clone());
        grid.lower.push(lower);
        grid.upper.push(upper);
        grid.truth.push(p.truth);
    }
    if let Some((name, p)) = priors.into_iter().next() {
        return Err(Error::Config {
            line: p.line,
            msg: format!("prior for `{name}` which is not in grid.names"),
        });
    }
    Ok(grid)
}

fn parse_num(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config {
            line,
            msg: format!("`{key}` expects a finite number, got `{value}`"),
        })
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn unknown(line: usize, key: &str) -> Error {
    Error::Config {
        line,
        msg: format!("unknown key `{key}`"),
    }
}

//! Q-table and experience pool, with their CSV dumps.
//!
//! Both are logically dense over the grid's `N_s` states but stored sparsely:
//! a Q-table row that was never written reads as zeros, and a pool entry
//! exists only for searched states. Four-parameter grids have millions of
//! states of which only a small fraction is ever visited.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const QTABLE_HEADER: &str = "state_index,action_index,value";
pub const POOL_HEADER: &str = "state_index,searched,eps_s,reward";

/// Stand-in for an infinitely bad reward on states whose playback failed.
pub const FAILED_REWARD: f64 = f64::MIN;

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: u64,
    n_actions: usize,
    rows: HashMap<u64, Vec<f64>>,
}

impl QTable {
    pub fn zeros(n_states: u64, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            rows: HashMap::new(),
        }
    }

    pub fn n_states(&self) -> u64 {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: u64, action: usize) -> f64 {
        self.rows.get(&state).map_or(0.0, |r| r[action])
    }

    /// Row of action values; all zeros if the state was never updated.
    pub fn row(&self, state: u64) -> std::borrow::Cow<'_, [f64]> {
        match self.rows.get(&state) {
            Some(r) => std::borrow::Cow::Borrowed(r),
            None => std::borrow::Cow::Owned(vec![0.0; self.n_actions]),
        }
    }

    pub fn max(&self, state: u64) -> f64 {
        match self.rows.get(&state) {
            Some(r) => r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            None => 0.0,
        }
    }

    pub fn set(&mut self, state: u64, action: usize, value: f64) {
        let n = self.n_actions;
        self.rows.entry(state).or_insert_with(|| vec![0.0; n])[action] = value;
    }

    /// Number of rows holding at least one written entry.
    pub fn touched_rows(&self) -> usize {
        self.rows.len()
    }

    /// Written entries sorted by `(state, action)`.
    pub fn entries(&self) -> Vec<(u64, usize, f64)> {
        let mut keys: Vec<u64> = self.rows.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .flat_map(|s| self.rows[&s].iter().enumerate().map(move |(a, &v)| (s, a, v)))
            .collect()
    }

    pub fn check_shape(&self, n_states: u64, n_actions: usize) -> Result<()> {
        if self.n_states != n_states || self.n_actions != n_actions {
            return Err(Error::Shape(format!(
                "Q-table is {}x{}, grid needs {}x{}",
                self.n_states, self.n_actions, n_states, n_actions
            )));
        }
        Ok(())
    }

    /// Sparse dump: a `# states=N actions=A` shape line, the header, then
    /// every entry of each written row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# states={} actions={}\n{QTABLE_HEADER}\n", self.n_states, self.n_actions);
        for (s, a, v) in self.entries() {
            writeln!(out, "{s},{a},{v}").expect("writing to a String");
        }
        out
    }

    /// Parses a dump for a grid of the given shape. A recorded shape that
    /// differs is a shape error; indices outside the shape are schema errors.
    pub fn from_csv(text: &str, n_states: u64, n_actions: usize) -> Result<Self> {
        if let Some(shape) = recorded_shape(text)? {
            if shape != (n_states, Some(n_actions)) {
                return Err(Error::Shape(format!(
                    "Q-table dump is {}x{}, grid needs {n_states}x{n_actions}",
                    shape.0,
                    shape.1.unwrap_or(0)
                )));
            }
        }
        let mut table = Self::zeros(n_states, n_actions);
        for (row, fields) in csv_rows(text, QTABLE_HEADER, 3)? {
            let s: u64 = parse_field(row, "state_index", fields[0])?;
            let a: usize = parse_field(row, "action_index", fields[1])?;
            let v: f64 = parse_field(row, "value", fields[2])?;
            if s >= n_states || a >= n_actions {
                return Err(Error::Schema {
                    row,
                    msg: format!("entry ({s}, {a}) outside a {n_states}x{n_actions} table"),
                });
            }
            if !v.is_finite() {
                return Err(Error::Schema {
                    row,
                    msg: "value must be finite".into(),
                });
            }
            table.set(s, a, v);
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, n_states: u64, n_actions: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_csv(&text, n_states, n_actions)
    }
}

/// Cached outcome of one model run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolEntry {
    /// Discrepancy; `+inf` when playback failed.
    pub eps_s: f64,
    pub reward: f64,
}

impl PoolEntry {
    pub fn failed() -> Self {
        Self {
            eps_s: f64::INFINITY,
            reward: FAILED_REWARD,
        }
    }

    pub fn is_failed(&self) -> bool {
        !self.eps_s.is_finite()
    }
}

/// Searched flags plus cached discrepancy and reward per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperiencePool {
    n_states: u64,
    entries: HashMap<u64, PoolEntry>,
}

impl ExperiencePool {
    pub fn new(n_states: u64) -> Self {
        Self {
            n_states,
            entries: HashMap::new(),
        }
    }

    pub fn n_states(&self) -> u64 {
        self.n_states
    }

    pub fn is_searched(&self, state: u64) -> bool {
        self.entries.contains_key(&state)
    }

    pub fn get(&self, state: u64) -> Option<PoolEntry> {
        self.entries.get(&state).copied()
    }

    pub fn insert(&mut self, state: u64, entry: PoolEntry) {
        self.entries.insert(state, entry);
    }

    pub fn searched_count(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Searched entries sorted by state index.
    pub fn entries(&self) -> Vec<(u64, PoolEntry)> {
        let mut out: Vec<_> = self.entries.iter().map(|(&s, &e)| (s, e)).collect();
        out.sort_unstable_by_key(|(s, _)| *s);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# states={}\n{POOL_HEADER}\n", self.n_states);
        for (s, e) in self.entries() {
            writeln!(out, "{s},1,{},{}", e.eps_s, e.reward).expect("writing to a String");
        }
        out
    }

    pub fn from_csv(text: &str, n_states: u64) -> Result<Self> {
        if let Some((n, _)) = recorded_shape(text)? {
            if n != n_states {
                return Err(Error::Shape(format!("pool dump covers {n} states, grid has {n_states}")));
            }
        }
        let mut pool = Self::new(n_states);
        for (row, fields) in csv_rows(text, POOL_HEADER, 4)? {
            let s: u64 = parse_field(row, "state_index", fields[0])?;
            if s >= n_states {
                return Err(Error::Schema {
                    row,
                    msg: format!("state {s} outside a {n_states}-state grid"),
                });
            }
            let searched: u8 = parse_field(row, "searched", fields[1])?;
            if searched == 0 {
                continue;
            }
            let eps_s: f64 = parse_field(row, "eps_s", fields[2])?;
            let reward: f64 = parse_field(row, "reward", fields[3])?;
            pool.insert(s, PoolEntry { eps_s, reward });
        }
        Ok(pool)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, n_states: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_csv(&text, n_states)
    }
}

/// Reads a leading `# states=N [actions=A]` line, if any.
fn recorded_shape(text: &str) -> Result<Option<(u64, Option<usize>)>> {
    let Some((i, line)) = text.lines().enumerate().find(|(_, l)| !l.trim().is_empty()) else {
        return Ok(None);
    };
    let Some(body) = line.trim().strip_prefix('#') else {
        return Ok(None);
    };
    let bad = || Error::Schema {
        row: i + 1,
        msg: format!("malformed shape line `{}`", line.trim()),
    };
    let mut states = None;
    let mut actions = None;
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("states", v)) => states = Some(v.parse::<u64>().map_err(|_| bad())?),
            Some(("actions", v)) => actions = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    Ok(Some((states.ok_or_else(bad)?, actions)))
}

fn csv_rows<'a>(text: &'a str, header: &str, width: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((i, h)) => {
            return Err(Error::Schema {
                row: i + 1,
                msg: format!("expected header `{header}`, found `{}`", h.trim()),
            })
        }
        None => {
            return Err(Error::Schema {
                row: 1,
                msg: format!("missing header `{header}`"),
            })
        }
    }
    lines
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != width {
                Err(Error::Schema {
                    row: i + 1,
                    msg: format!("expected {width} fields, found {}", fields.len()),
                })
            } else {
                Ok((i + 1, fields))
            }
        })
        .collect()
}

fn parse_field<T: std::str::FromStr>(row: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Schema {
        row,
        msg: format!("column `{name}`: cannot parse `{raw}`"),
    })
}

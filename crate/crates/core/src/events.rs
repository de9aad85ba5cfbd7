//! PMU events: data model, CSV schema, synthetic generation and noise.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{playback, sample_period, OutputTrajectory, PlaybackSample};
use crate::params::ModelParameters;

pub const CSV_HEADER: [&str; 6] = ["t", "v_mag", "v_ang", "freq", "p_meas", "q_meas"];

/// Time-aligned boundary inputs and measured P/Q outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub samples: Vec<PlaybackSample>,
    pub p_meas: Vec<f64>,
    pub q_meas: Vec<f64>,
    pub sample_rate: f64,
}

impl Event {
    /// Assembles an event, checking lengths and spacing.
    pub fn new(samples: Vec<PlaybackSample>, p_meas: Vec<f64>, q_meas: Vec<f64>) -> Result<Self> {
        let period = sample_period(&samples)?;
        if p_meas.len() != samples.len() || q_meas.len() != samples.len() {
            return Err(Error::Shape(format!(
                "{} samples but {} P and {} Q measurements",
                samples.len(),
                p_meas.len(),
                q_meas.len()
            )));
        }
        Ok(Self {
            samples,
            p_meas,
            q_meas,
            sample_rate: 1.0 / period,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Operating point used to initialize playback.
    pub fn initial_power(&self) -> (f64, f64) {
        (self.p_meas[0], self.q_meas[0])
    }

    /// Measured outputs as a trajectory (`z*`).
    pub fn measured(&self) -> OutputTrajectory {
        OutputTrajectory {
            p_model: self.p_meas.clone(),
            q_model: self.q_meas.clone(),
        }
    }

    /// Plays the event back under `params`.
    pub fn replay(&self, params: &ModelParameters) -> Result<OutputTrajectory> {
        let (p0, q0) = self.initial_power();
        playback(params, &self.samples, p0, q0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceKind {
    /// Bus voltage drops to `(1 - magnitude)` for the window.
    VoltageDip,
    /// Bus angle shifted by `magnitude` rad for the window.
    AngleStep,
    /// Frequency ramps by `magnitude` pu over the window, then returns; the
    /// angle integrates the excursion.
    FrequencyRamp,
}

impl std::str::FromStr for DisturbanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voltage-dip" => Ok(Self::VoltageDip),
            "angle-step" => Ok(Self::AngleStep),
            "frequency-ramp" => Ok(Self::FrequencyRamp),
            other => Err(Error::Usage(format!("unknown disturbance kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    pub magnitude: f64,
    pub start: f64,
    pub duration: f64,
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        Self {
            kind: DisturbanceKind::VoltageDip,
            magnitude: 0.2,
            start: 1.0,
            duration: 0.5,
        }
    }
}

impl DisturbanceSpec {
    /// Second reference event: a shallower, longer 10% dip starting at 0.5 s.
    pub fn second_reference() -> Self {
        Self {
            kind: DisturbanceKind::VoltageDip,
            magnitude: 0.1,
            start: 0.5,
            duration: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: String| {
            Err(Error::InvalidParameter {
                name: name.to_string(),
                reason,
            })
        };
        if !(self.start >= 0.0) {
            return bad("event.start", format!("must be >= 0, got {}", self.start));
        }
        if !(self.duration > 0.0) {
            return bad("event.duration", format!("must be > 0, got {}", self.duration));
        }
        if !self.magnitude.is_finite() {
            return bad("event.magnitude", "must be finite".into());
        }
        if self.kind == DisturbanceKind::VoltageDip && !(self.magnitude > 0.0 && self.magnitude < 1.0) {
            return bad(
                "event.magnitude",
                format!("voltage dip must lie in (0, 1), got {}", self.magnitude),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_pq: f64,
    pub seed: u64,
}

/// Builds the boundary-signal series for a disturbance on a flat 1∠0 bus.
pub fn disturbance_inputs(spec: &DisturbanceSpec, duration: f64, rate: f64) -> Result<Vec<PlaybackSample>> {
    spec.validate()?;
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rate".into(),
            reason: format!("must be positive, got {rate}"),
        });
    }
    if !(duration > spec.start + spec.duration) {
        return Err(Error::InvalidParameter {
            name: "duration".into(),
            reason: format!(
                "must exceed disturbance end {}, got {duration}",
                spec.start + spec.duration
            ),
        });
    }
    let n = (duration * rate).round() as usize;
    let end = spec.start + spec.duration;
    let omega_s = 2.0 * std::f64::consts::PI * 60.0;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / rate;
            let active = t >= spec.start && t < end;
            let mut s = PlaybackSample {
                t,
                v_mag: 1.0,
                v_ang: 0.0,
                freq: 1.0,
            };
            match spec.kind {
                DisturbanceKind::VoltageDip if active => s.v_mag = 1.0 - spec.magnitude,
                DisturbanceKind::AngleStep if active => s.v_ang = spec.magnitude,
                DisturbanceKind::FrequencyRamp if t >= spec.start => {
                    let slope = spec.magnitude / spec.duration;
                    let tau = (t - spec.start).min(spec.duration);
                    if active {
                        s.freq = 1.0 + slope * tau;
                    }
                    // integral of (f - 1) over the ramp, in rad
                    s.v_ang = omega_s * 0.5 * slope * tau * tau;
                }
                _ => {}
            }
            s
        })
        .collect();
    Ok(samples)
}

/// Simulates `true_params` under the disturbance and records the outputs as
/// measurements.
pub fn synth_event(
    true_params: &ModelParameters,
    spec: &DisturbanceSpec,
    duration: f64,
    rate: f64,
    p0: f64,
    q0: f64,
    noise: Option<&NoiseSpec>,
) -> Result<Event> {
    let samples = disturbance_inputs(spec, duration, rate)?;
    let z = playback(true_params, &samples, p0, q0)?;
    let event = Event::new(samples, z.p_model, z.q_model)?;
    Ok(match noise {
        Some(n) => add_noise(&event, n)?,
        None => event,
    })
}

/// Adds seeded i.i.d. Gaussian noise to the P/Q measurements only.
pub fn add_noise(event: &Event, noise: &NoiseSpec) -> Result<Event> {
    if !(noise.sigma_pq >= 0.0) || !noise.sigma_pq.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_pq".into(),
            reason: format!("must be non-negative, got {}", noise.sigma_pq),
        });
    }
    let mut out = event.clone();
    if noise.sigma_pq == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, noise.sigma_pq).expect("sigma checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    for v in out.p_meas.iter_mut().chain(out.q_meas.iter_mut()) {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}

pub fn save_event_csv(event: &Event, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = CSV_HEADER.join(",");
    buf.push('\n');
    for (k, s) in event.samples.iter().enumerate() {
        writeln!(
            buf,
            "{},{},{},{},{},{}",
            s.t, s.v_mag, s.v_ang, s.freq, event.p_meas[k], event.q_meas[k]
        )
        .expect("writing to a String");
    }
    std::fs::write(path.as_ref(), buf).map_err(|e| Error::io(path, e))
}

pub fn load_event_csv(path: impl AsRef<Path>) -> Result<Event> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    parse_event_csv(&text)
}

/// Parses the event schema; rows are numbered from 1 at the header.
pub fn parse_event_csv(text: &str) -> Result<Event> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Schema {
        row: 1,
        msg: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut index = [0usize; 6];
    for (slot, name) in index.iter_mut().zip(CSV_HEADER) {
        *slot = cols.iter().position(|c| *c == name).ok_or_else(|| Error::Schema {
            row: 1,
            msg: format!("missing column `{name}`"),
        })?;
    }

    let mut samples = Vec::new();
    let mut p = Vec::new();
    let mut q = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::Schema {
                row,
                msg: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let mut vals = [0.0; 6];
        for (v, (&idx, name)) in vals.iter_mut().zip(index.iter().zip(CSV_HEADER)) {
            *v = fields[idx].parse().map_err(|_| Error::Schema {
                row,
                msg: format!("column `{name}`: cannot parse `{}`", fields[idx]),
            })?;
        }
        if vals[1] < 0.0 {
            return Err(Error::Schema {
                row,
                msg: "v_mag must be non-negative".into(),
            });
        }
        samples.push(PlaybackSample {
            t: vals[0],
            v_mag: vals[1],
            v_ang: vals[2],
            freq: vals[3],
        });
        p.push(vals[4]);
        q.push(vals[5]);
    }
    // shift by one so reported rows match file lines (header = row 1)
    Event::new(samples, p, q).map_err(|e| match e {
        Error::NonUniformSpacing { row, expected, got } => Error::NonUniformSpacing {
            row: row + 2,
            expected,
            got,
        },
        other => other,
    })
}

//! Synchronous generator parameter calibration from PMU event playback.
//!
//! - [`model`]: reduced two-axis generator, exciter and governor driven by
//!   measured bus voltage and angle.
//! - [`events`]: PMU event records, CSV schema, synthetic events.
//! - [`sensitivity`]: trajectory sensitivity ranking of parameters.
//! - [`qcal`]: tabular Q-learning search over a parameter grid.
//! - [`config`] and [`cli`]: the `gencal` command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod events;
pub mod model;
pub mod params;
pub mod qcal;
pub mod sensitivity;

pub use error::{Error, ErrorKind, Result};
pub use events::{DisturbanceKind, DisturbanceSpec, Event, NoiseSpec};
pub use model::{GeneratorState, OutputTrajectory, PlaybackSample};
pub use params::ModelParameters;
pub use sensitivity::{rank_parameters, trajectory_sensitivity, SensitivityReport};

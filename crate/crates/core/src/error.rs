use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid reactance {0}: must be positive")]
    InvalidReactance(f64),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite value in state component `{0}`")]
    NonFinite(&'static str),

    #[error("integration diverged at t = {t} s: state `{state}` is non-finite")]
    Divergence { state: &'static str, t: f64 },

    #[error("equilibrium initialization failed: {0}")]
    Initialization(String),

    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("event needs at least 2 samples, got {0}")]
    EmptyEvent(usize),

    #[error("non-uniform sample spacing at row {row}: expected dt = {expected}, got {got}")]
    NonUniformSpacing { row: usize, expected: f64, got: f64 },

    #[error("schema error at row {row}: {msg}")]
    Schema { row: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parameter `{0}` has zero nominal value; relative perturbation is undefined")]
    ZeroNominal(String),

    #[error("invalid tolerance tau = {0}: must lie in (0, 0.5]")]
    InvalidTolerance(f64),

    #[error("invalid bounds for `{name}`: lower {lower} must be below upper {upper}")]
    InvalidBounds { name: String, lower: f64, upper: f64 },

    #[error("invalid grid state: {0}")]
    InvalidState(String),

    #[error("discrepancy must be non-negative, got {0}")]
    NegativeDiscrepancy(f64),

    #[error("calibration needs at least one episode")]
    NoEpisodes,

    #[error("experience pool holds no valid searched state")]
    EmptyPool,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure classes, used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: configuration, file schema, arguments, or I/O.
    Config,
    /// The dynamic model could not be initialized or integrated.
    Simulation,
    /// An internal numerical invariant was violated.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Divergence { .. } | Initialization(_) | NoEpisodes | EmptyPool => ErrorKind::Simulation,
            NonFinite(_) => ErrorKind::Numerical,
            _ => ErrorKind::Config,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

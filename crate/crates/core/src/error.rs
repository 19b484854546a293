use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at index {index} ({value})")]
    NonFinite { index: usize, value: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field is in {found} space, expected {expected} space")]
    WrongSpace {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("damping must be nonnegative: a = {value:e} at {location:?}")]
    NegativeDamping { value: f64, location: Vec<f64> },

    #[error("invalid exponents: {0} (required: 0<σ₂≤σ₁, 0<σ₃<σ₁, σ₁<2)")]
    InvalidExponents(String),

    #[error("decay of Δa violated numerically: {0}")]
    UnboundedSup(String),

    #[error(
        "non-finite field after step {step} (t = {time}); max modulus {max_modulus:e} at {location:?}"
    )]
    Blowup {
        step: u64,
        time: f64,
        max_modulus: f64,
        location: Vec<f64>,
    },

    #[error("snapshot decode: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error("series: {0}")]
    Series(String),

    #[error("scattering: {0}")]
    Scattering(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

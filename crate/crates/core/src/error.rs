use std::path::PathBuf;

/// Errors produced by the sampling, control and experiment layers.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected {expected}, got {actual} ({what})")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("every rollout produced a non-finite cost")]
    AllCostsNonFinite,
    #[error("signal too short for a periodogram: {0} samples (need at least 4)")]
    SignalTooShort(usize),
    #[error("frequency band [{lo}, {hi}] contains no usable bins")]
    EmptyBand { lo: f64, hi: f64 },
    #[error("need at least {needed} items, got {got}: {what}")]
    NotEnoughData {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed run log: {0}")]
    MalformedLog(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

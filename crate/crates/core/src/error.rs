use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("slot index {slot} out of range for horizon {horizon}")]
    SlotOutOfRange { slot: usize, horizon: usize },

    #[error("insufficient data: unregularized least squares needs at least 2 distinct regressors")]
    InsufficientData,

    #[error("unidentifiable: insufficient price variation (condition estimate {condition:e})")]
    Unidentifiable { condition: f64 },

    #[error("degenerate estimate: price denominator {denominator:e} is numerically zero")]
    DegenerateEstimate { denominator: f64 },

    #[error("singular KKT system at slot {slot}")]
    SingularSystem { slot: usize },

    #[error("need ≥ 2 replications, got {got}")]
    NeedReplications { got: usize },

    #[error("nonpositive value {value:e} at t = {t} inside the fit window")]
    NonPositiveInWindow { t: f64, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

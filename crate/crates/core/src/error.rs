//! Error type shared by every stage of the library.

use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage tag used when an error is surfaced by `diagnose`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Changepoint,
    Estimation,
    Assignment,
    Classification,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Changepoint => "changepoint detection",
            Stage::Estimation => "friction estimation",
            Stage::Assignment => "assignment",
            Stage::Classification => "classification",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("invalid telemetry: {0}")]
    InvalidTelemetry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid spin profile: {0}")]
    InvalidSpinProfile(String),

    #[error("non-increasing timestamps at index {0}")]
    NonIncreasingTimestamps(usize),

    #[error("window too short: {len} points, need at least {needed}")]
    WindowTooShort { len: usize, needed: usize },

    #[error("index {index} out of range [{lo}, {hi}]")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("unidentifiable viscous coefficient")]
    UnidentifiableViscous,

    #[error("over-segmented window: {0}")]
    OverSegmented(String),

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("no feasible assignment")]
    NoFeasibleAssignment,

    #[error("single-class input")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown benchmark suite `{0}`")]
    UnknownSuite(String),

    #[error("{stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

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
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// True for errors caused by malformed input or configuration, as
    /// opposed to failures while processing otherwise valid data.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidModel(_)
            | Error::InvalidTelemetry(_)
            | Error::InvalidConfig(_)
            | Error::InvalidSpinProfile(_)
            | Error::NonIncreasingTimestamps(_)
            | Error::InvalidAlpha(_)
            | Error::DimensionMismatch { .. }
            | Error::UnknownSuite(_)
            | Error::Json(_)
            | Error::Csv(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

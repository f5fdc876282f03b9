use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument fell outside the domain of the operation.
    #[error("domain error: {what} = {value} outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Control point `index` (or sample) sits at or behind the near plane.
    #[error("point {index} is behind the camera (depth {depth})")]
    BehindCamera { index: usize, depth: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid scene: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidScene(Vec<crate::geometry::Violation>),

    #[error("guidance ingestion failed for {path}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    #[error("run error: {0}")]
    Run(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("png error: {0}")]
    Png(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain { what, value, lo, hi }
    }

    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Argument(_)
                | Error::Config(_)
                | Error::InvalidScene(_)
                | Error::Json(_)
        )
    }
}

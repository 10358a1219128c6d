use std::path::PathBuf;

use thiserror::Error;

use crate::channel::ChannelError;
use crate::geometry::GeometryError;
use crate::scenario::ScenarioError;
use crate::tracking::TrackingError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("unknown route `{0}`")]
    UnknownRoute(String),
    #[error("unknown gNB `{0}`")]
    UnknownGnb(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("event log line {line}: {message}")]
    Log { line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("invalid config: {0}")]
    Schema(String),

    #[error(transparent)]
    Model(#[from] gnlab::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cannot compare results: {0}")]
    Compare(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse { .. } | CliError::Schema(_) => 2,
            CliError::Model(gnlab::Error::QuadratureNonConvergence { .. })
            | CliError::Model(gnlab::Error::StepNonConvergence { .. }) => 4,
            CliError::Model(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 5,
            CliError::Compare(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

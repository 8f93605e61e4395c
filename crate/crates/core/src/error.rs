use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FccaError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid counterfactual problem: {0}")]
    InvalidProblem(String),

    #[error("pipeline infeasible: {0}")]
    Infeasible(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl FccaError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FccaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 config, 3 data, 4 infeasible.
    pub fn exit_code(&self) -> i32 {
        match self {
            FccaError::Config(_) => 2,
            FccaError::Infeasible(_) => 4,
            FccaError::Data(_)
            | FccaError::Io { .. }
            | FccaError::NonNumeric { .. }
            | FccaError::Dimension { .. }
            | FccaError::Csv(_)
            | FccaError::Json(_) => 3,
            FccaError::InvalidProblem(_) | FccaError::Model(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, FccaError>;

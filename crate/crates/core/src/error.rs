use std::path::PathBuf;

use crate::training::TrainReport;

/// Errors produced by the workbench library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("weight vector has length {actual}, architecture needs {expected}")]
    WeightLength { expected: usize, actual: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The damped linear system could not be solved; raise lambda and retry.
    #[error("Levenberg-Marquardt step failed at lambda = {lambda:e}")]
    StepFailed { lambda: f64 },

    #[error("training diverged after {} epochs: {reason}", report.records.len())]
    TrainingDiverged {
        reason: String,
        report: Box<TrainReport>,
    },

    #[error("controller produced a non-finite output at sample {sample} (regressor {regressor:?})")]
    NonFiniteControl { sample: usize, regressor: [f64; 5] },

    #[error("log too short: {len} samples, need at least {min}")]
    LogTooShort { len: usize, min: usize },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

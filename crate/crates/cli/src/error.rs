use std::path::PathBuf;

use kbqa_core::dataset::{CorpusError, SplitError, StatsError};
use kbqa_core::kg::{ExecError, GraphError};
use kbqa_core::metrics::MetricError;
use kbqa_neural::{CheckpointError, ConfigError, ModelError, TrainError};
use thiserror::Error;

/// Every failure a command can report. The first stderr line is
/// `Category: detail`.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    /// Rendered parse error (`line:col: code: message`).
    #[error("{rendered}")]
    Parse { code: &'static str, rendered: String },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{0}")]
    Predictions(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(CheckpointError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(TrainError),
    #[error("worst tensor {name}: relative error {error:.3e} exceeds {tol:.0e}")]
    GradcheckFailed { name: String, error: f64, tol: f64 },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IoError",
            CliError::Usage(_) => "UsageError",
            CliError::Parse { code, .. } => code,
            CliError::Validation(_) => "ValidationError",
            CliError::Graph(_) => "GraphError",
            CliError::Exec(_) => "ExecError",
            CliError::Corpus(_) => "CorpusError",
            CliError::Split(_) => "SplitError",
            CliError::Stats(_) => "StatsError",
            CliError::Metric(_) => "MetricError",
            CliError::Predictions(_) => "PredictionError",
            CliError::Config(_) => "ConfigError",
            CliError::Checkpoint(CheckpointError::Io(_)) => "IoError",
            CliError::Checkpoint(_) => "CheckpointError",
            CliError::Model(_) => "ModelError",
            CliError::Train(TrainError::Diverged { .. }) => "TrainingDiverged",
            CliError::Train(_) => "TrainError",
            CliError::GradcheckFailed { .. } => "GradcheckFailed",
        }
    }

    /// 1 for I/O failures, 3 for divergence, 4 for a failed gradient check,
    /// 2 for everything caused by bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Checkpoint(CheckpointError::Io(_)) => 1,
            CliError::Train(TrainError::Diverged { .. }) => 3,
            CliError::GradcheckFailed { .. } => 4,
            _ => 2,
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Checkpoint(e)
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Model(m) => CliError::Model(m),
            other => CliError::Train(other),
        }
    }
}

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dataset is empty after filtering")]
    EmptyDataset,
    #[error("column `{column}` is degenerate: {reason}")]
    DegenerateColumn { column: String, reason: String },
    #[error("no standardization parameters for column `{0}`")]
    MissingParams(String),
    #[error("invalid observation value {0}")]
    InvalidObservation(f64),
    #[error("point ({lat}, {lon}) lies outside the grid of field `{field}`")]
    OutOfDomain { field: String, lat: f64, lon: f64 },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dataset too small: {0}")]
    TooSmall(String),
    #[error("least-squares system is singular")]
    SingularSystem,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("insufficient trial history: {0}")]
    InsufficientHistory(String),
    #[error("no trial completed successfully")]
    NoSuccessfulTrial,
    #[error("r2 undefined: target has zero variance")]
    UndefinedR2,
    #[error("row alignment error: {0}")]
    Alignment(String),
    #[error("feature count mismatch: model expects {expected}, got {got}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

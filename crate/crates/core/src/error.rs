use thiserror::Error;

/// Errors raised by the tree, engine, environment and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node `{node}` in coordinate tree")]
    UnknownNode { node: String },

    #[error("invalid tree description: {0}")]
    InvalidTree(String),

    #[error("cannot split box `{serial}` along axis {axis}: node is a leaf")]
    CannotSplit { serial: String, axis: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("statistics undefined for a cell with zero hits")]
    UndefinedStats,

    #[error("reward {reward} at step {t} lies outside [0, 1]")]
    RewardOutOfRange { t: usize, reward: f64 },

    #[error("no data: the run has not taken any steps")]
    NoData,

    #[error("unsupported environment: {0}")]
    UnsupportedEnvironment(String),

    #[error("replay diverged at step {t}: {reason}")]
    ReplayDiverged { t: usize, reason: String },

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::fmt;

use crate::sim::TrajectoryRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sample count mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("exact assignment limited to N <= {limit} (got {n}); use wasserstein2_sliced instead")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed config: {0}")]
    ConfigSyntax(String),

    #[error("{key}: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("infeasible observation gap: {0}")]
    InfeasibleGap(String),

    #[error("{kind} at t={time} (particle {particle})")]
    Diverged {
        kind: DivergenceKind,
        time: f64,
        particle: usize,
        partial: Box<TrajectoryRecord>,
    },

    #[error("decay rate not estimable: {0}")]
    NotEstimable(String),

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    /// A state entry became NaN or infinite.
    NonFinite,
    /// A state entry exceeded the explosion guard.
    Explosion,
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceKind::NonFinite => f.write_str("non-finite state"),
            DivergenceKind::Explosion => f.write_str("explosion"),
        }
    }
}

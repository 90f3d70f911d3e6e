use thiserror::Error;

/// Invalid input data: a violated invariant, with the field path that failed.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path} {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid link id {0}")]
    InvalidLink(usize),
    #[error("phase {0} outside [0, 1)")]
    PhaseOutOfRange(f64),
    #[error("singular configuration: resistance condition estimate {condition:e} exceeds {limit:e}")]
    SingularConfiguration { condition: f64, limit: f64 },
    #[error("newton iteration did not converge at t = {t} after {retries} step halvings (residual {residual:e})")]
    NewtonDiverged { t: f64, retries: u32, residual: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),
    #[error("all {count} objective evaluations failed; last error: {last}")]
    AllEvaluationsFailed { count: usize, last: String },
}

impl SimError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SimError::SingularConfiguration { .. }
                | SimError::NewtonDiverged { .. }
                | SimError::NonFinite(_)
                | SimError::AllEvaluationsFailed { .. }
        )
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

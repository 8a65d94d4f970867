use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    /// Evaluation requested on a line or point where the field is not defined.
    #[error("singular point at x = {x}, t = {t}")]
    Singular { x: f64, t: f64 },

    /// Argument outside the admissible domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Fixed-point iteration of a lattice step failed to converge.
    #[error("fixed-point iteration did not converge at node {node}, level {level} (residual {residual:e})")]
    StepSize { node: usize, level: usize, residual: f64 },

    /// Result not stable under grid refinement.
    #[error("unresolved: relative change {change:e} under grid doubling exceeds {tolerance:e}")]
    Resolution { change: f64, tolerance: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl LabError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

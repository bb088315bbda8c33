use thiserror::Error;

pub type Result<T> = std::result::Result<T, NavError>;

#[derive(Debug, Error)]
pub enum NavError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("point lies outside the closed free space")]
    OutsideFreeSpace,

    #[error("point lies inside the target ball (|x - x*|^2 <= {delta})")]
    InsideTargetBall { delta: f64 },

    #[error("obstacle index {index} out of range for a world with {count} obstacles")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("numerical method did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("world generation failed: {0}")]
    Generation(String),

    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl NavError {
    /// True for errors caused by bad input data rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            NavError::DimensionMismatch { .. }
                | NavError::NotSpd(_)
                | NavError::InvalidConfig(_)
                | NavError::InvalidWorld(_)
                | NavError::Parse(_)
                | NavError::Json(_)
                | NavError::Csv(_)
                | NavError::OutsideFreeSpace
                | NavError::Precondition(_)
        )
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(NavError::DimensionMismatch { expected, found })
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScbfError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solution diverged at step {step} (t = {time})")]
    Diverged { step: usize, time: f64 },

    #[error("integration horizon {horizon} too short for the tail of the radius integral{}",
        match suggested { Some(t) => format!("; try a horizon of at least {t:.1}"), None => ", and the exponential weight does not decay: the noise is too strong for this alpha".to_string() })]
    NeedsLongerHorizon { horizon: f64, suggested: Option<f64> },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ScbfError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> ScbfError {
    ScbfError::InvalidParameter(msg.into())
}

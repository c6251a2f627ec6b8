use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite derivative for agent {agent} at step {step} (t = {time})")]
    NonFinite { agent: usize, step: usize, time: f64 },
    #[error("continuation failed: {0}")]
    Continuation(String),
    #[error("parameter set outside theory: {0}")]
    OutOfTheory(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Continuation(_) | Error::Domain(_) | Error::OutOfTheory(_)
        )
    }
}

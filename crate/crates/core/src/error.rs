use thiserror::Error;

use crate::config::ConfigError;

/// Failure of a numerical routine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OmitError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("singular linear system ({0})")]
    Singular(&'static str),
    #[error("undefined ratio: Stokes vanishes")]
    UndefinedRatio,
    #[error("integration diverged at t = {t} ns: {reason}")]
    Divergence { t: f64, reason: String },
    #[error("mass out of sensing range (K ratio {ratio})")]
    MassOutOfRange { ratio: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

impl OmitError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        OmitError::InvalidInput(msg.into())
    }
}

use thiserror::Error;

use crate::domain::Setting;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid direction: ({0}, {1}, {2}) cannot be normalized")]
    InvalidDirection(f64, f64, f64),

    #[error("invalid amplitude: s = {0} is outside [0, 1]")]
    InvalidAmplitude(f64),

    #[error("invalid marginal: settings must differ, got {0} twice")]
    InvalidMarginal(Setting),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid search parameters: {0}")]
    InvalidSearch(String),

    #[error("insufficient data: no throws with setting pair ({0}, {1})")]
    InsufficientData(Setting, Setting),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("rate {0} lies outside the range of the hazard function")]
    OutOfRange(f64),
    #[error("hazard rate is constant; inverse undefined")]
    Unsupported,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quantile is not unique: limit distribution is flat at level {0}")]
    NonUnique(f64),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("reports come from different configurations: {0}")]
    ConfigMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

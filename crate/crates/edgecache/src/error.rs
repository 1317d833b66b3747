use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid demand profile: {0}")]
    InvalidProfile(String),
    #[error("no recurrent demand: every item has an infinite OFF period")]
    NoRecurrentDemand,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("inconsistent curve kinds in one allocation")]
    MixedCurveKinds,
    #[error("missing occupancy estimate for item {0}")]
    MissingEstimate(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised across the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("site (step {step}, {site:?}) lies outside the generated window")]
    OutOfWindow { step: usize, site: Vec<i64> },

    #[error("requested {requested} steps but the environment horizon is {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    #[error("path is not a nearest-neighbour path from the origin: {0}")]
    InvalidPath(String),

    #[error("non-integer weight {value} at step {step}, site {site:?}")]
    NonIntegerWeight { step: usize, site: Vec<i64>, value: f64 },

    #[error("enumeration of {paths} paths exceeds the limit of {limit}")]
    EnumerationTooLarge { paths: f64, limit: f64 },

    #[error("count table is approximate (log-space); exact counts are unavailable")]
    InexactCounts,

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

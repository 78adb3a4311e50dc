use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model inconsistency: {0}")]
    Inconsistent(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("word left the materialized domain after {prefix_len} letters (prefix `{prefix}`): {reason}")]
    Escape {
        prefix_len: usize,
        prefix: String,
        reason: String,
    },

    #[error(
        "alpha = {alpha} admits no epsilon > 0: the parameter conditions require alpha < (sqrt(5)-1)/2 = {bound}"
    )]
    Threshold { alpha: f64, bound: f64 },
}

impl LabError {
    pub fn parameter(msg: impl Into<String>) -> Self {
        LabError::Parameter(msg.into())
    }

    pub fn range(msg: impl Into<String>) -> Self {
        LabError::Range(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

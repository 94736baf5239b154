use thiserror::Error;

use crate::scm::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model failed validation:\n{0}")]
    Validation(ValidationReport),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("exogenous valuation {0:?} is not one of the model's units")]
    UnknownUnit(Vec<u32>),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what} is capped at {cap} variables (got {got}): {reason}")]
    SizeCap {
        what: &'static str,
        cap: usize,
        got: usize,
        reason: String,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::Malformed(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

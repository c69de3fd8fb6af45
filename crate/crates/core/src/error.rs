use thiserror::Error;

use crate::gaplemma::PersistenceFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("calibration failure: {0}")]
    Calibration(String),

    /// A theorem hypothesis does not hold for the given input.
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    /// A step that the underlying proof guarantees has failed. Either the
    /// input was not what it claimed to be or the implementation is wrong.
    #[error("internal contradiction: {0}")]
    Internal(String),

    #[error("precision insufficient: {0}; retry with a smaller inverse precision")]
    Precision(String),

    #[error("insufficient depth: {message}; need depth >= {required}")]
    InsufficientDepth { message: String, required: usize },

    #[error("empty stage intersection at depth {}", .0.depth)]
    EmptyIntersection(Box<PersistenceFailure>),

    #[error("search budget of {0} node visits exhausted")]
    Budget(usize),
}

impl Error {
    /// Lemma-violation class errors, reported with exit status 2 by the CLI.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

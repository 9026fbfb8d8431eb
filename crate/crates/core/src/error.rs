use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BridgeError>;

#[derive(Debug, Error)]
pub enum BridgeError {
    /// A time or parameter outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    /// Zero energy on the observed window; the MLE is undefined there.
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("euler step {index} unstable: alpha*dt/(T-t) = {ratio} >= 1")]
    StepSize { index: usize, ratio: f64 },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl BridgeError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BridgeError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BridgeError::Io {
            path: path.into(),
            source,
        }
    }
}

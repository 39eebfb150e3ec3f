use thiserror::Error;

use crate::nogo::ExactSchemeData;
use crate::scheme::ApproxScheme;

pub type Result<T> = std::result::Result<T, Error>;

/// Best iterate carried by a failed minimization so callers can inspect it.
#[derive(Debug, Clone)]
pub enum BestIterate {
    Exact(ExactSchemeData),
    Scheme(ApproxScheme),
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: mismatched dimensions, sectors outside a window, and so on.
    #[error("structural error: {0}")]
    Structural(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("minimization did not converge: {message}")]
    NoConvergence {
        message: String,
        best: Box<BestIterate>,
        residual: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

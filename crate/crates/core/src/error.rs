use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point or argument lies outside the set where the object is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller combined arguments in a way the operation does not accept.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("singular constant at alpha = {alpha}: {reason}")]
    Singularity { alpha: f64, reason: String },

    #[error("alpha = {alpha} is outside the regime of {what}")]
    Regime { alpha: f64, what: &'static str },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("non-finite residual at ({x}, {y}, {z}) while measuring {what}")]
    Measurement {
        what: &'static str,
        x: f64,
        y: f64,
        z: f64,
    },

    #[error(
        "hypothesis violated: residual {measured} exceeds eps = {eps} at (u, v, w) = ({u}, {v}, {w})"
    )]
    HypothesisViolation {
        measured: f64,
        eps: f64,
        u: f64,
        v: f64,
        w: f64,
    },

    #[error("minimizer of {what} sits on the search boundary {boundary}; widen the range")]
    WidenRange { what: &'static str, boundary: f64 },

    #[error("ill-posed fit: {0}")]
    IllPosed(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Whether this error comes from bad input rather than from a failed
    /// mathematical check. The CLI maps the former to exit code 2.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::HypothesisViolation { .. })
    }
}

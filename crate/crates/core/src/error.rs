//! Error type shared across the crate.
//!
//! Numeric routines return structured errors instead of letting NaN or Inf
//! escape: a failed Cholesky, a non-finite quadrature node contribution, or a
//! dimension mismatch all carry enough context to identify the offending
//! operand without a debugger.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix operand has the wrong shape for the requested operation.
    #[error("dimension mismatch in {op}: operand `{operand}` is {got}, expected {want}")]
    Dimension {
        op: &'static str,
        operand: &'static str,
        got: String,
        want: String,
    },

    /// A value failed domain validation (negative noise variance, x <= 0 for
    /// the exponential integral, non-unit phase vector, ...).
    #[error("domain error in {context}: {detail}")]
    Domain { context: &'static str, detail: String },

    /// A numeric computation produced a non-finite or otherwise unusable
    /// intermediate (failed factorization, NaN objective, overflow).
    #[error("numeric failure in {context}: {detail}")]
    Numeric { context: &'static str, detail: String },

    /// Experiment configuration rejected, with the JSON path of the offending
    /// key when known.
    #[error("invalid configuration at `{path}`: {detail}")]
    Config { path: String, detail: String },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv emission failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("json emission failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numeric(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric { context, detail: detail.into() }
    }

    pub(crate) fn domain(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { context, detail: detail.into() }
    }

    pub(crate) fn config(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Config { path: path.into(), detail: detail.into() }
    }

    /// Stable machine-readable tag, used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Domain { .. } => "domain",
            Error::Numeric { .. } => "numeric",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by kernels, models and the analysis engines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A value cannot be represented in the requested format.
    #[error("range error: {0}")]
    Range(String),
    /// Input data does not match the declared layout.
    #[error("format error: {0}")]
    Format(String),
    /// A numerical procedure broke down (singular matrix, non-finite loss, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// An operation was called before its prerequisites were available.
    #[error("state error: {0}")]
    State(String),
    /// Invalid application configuration or model file.
    #[error("configuration error: {0}")]
    Config(String),
    /// Ingested tabular data violates an invariant.
    #[error("data error: {0}")]
    Data(String),
    /// The processing phase does not fit in the acquisition window.
    #[error("real-time violation: processing takes {processing_s:.6} s but the window is {window_s:.6} s")]
    RealTime { processing_s: f64, window_s: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

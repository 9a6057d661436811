use thiserror::Error;

/// Errors produced by the identification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A time or argument lies outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or grid sizes do not agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// A configuration value is invalid or infeasible.
    #[error("configuration error: {0}")]
    Config(String),

    /// A state trajectory became non-finite.
    #[error("numerical divergence at t = {time}: {detail}")]
    Divergence { time: f64, detail: String },

    /// The hypothesis of a bound is not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Serialization or parse failure for one of the text formats.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

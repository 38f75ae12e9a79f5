use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("comparison value {value} lies outside the domain {domain}")]
    DomainViolation { value: f64, domain: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("loss is not differentiable at s = {s}, c = {c}{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    NonDifferentiable { s: f64, c: f64, context: Option<String> },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("unknown {kind} identifier `{id}`")]
    Lookup { kind: &'static str, id: String },

    #[error("hypothesis not met: {0}")]
    Precondition(String),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

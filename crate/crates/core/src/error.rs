use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the generator, evaluator and CLI can surface.
///
/// [`Error::is_validation`] separates configuration/input problems (CLI exit
/// code 2) from runtime failures (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("infeasible census: {0}")]
    InfeasibleCensus(String),

    #[error("degenerate {what}: {message}")]
    Degenerate { what: String, message: String },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape { context: String, expected: String, found: String },

    #[error("checksum mismatch for {file}: manifest {expected}, computed {actual}")]
    Checksum { file: String, expected: String, actual: String },

    #[error("unsupported format version {found} (this build reads major version {supported})")]
    Version { found: String, supported: u32 },

    #[error("malformed {what}: {message}")]
    Malformed { what: String, message: String },

    #[error("singular normal equations: {0}")]
    Singular(String),

    #[error("model is not fitted")]
    Unfitted,

    #[error("variate {variate}: {source}")]
    Variate {
        variate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig { field: field.into(), message: message.into() }
    }

    pub fn degenerate(what: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Degenerate { what: what.into(), message: message.into() }
    }

    pub fn shape(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape { context: context.into(), expected: expected.to_string(), found: found.to_string() }
    }

    pub fn malformed(what: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Malformed { what: what.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn in_variate(self, variate: usize) -> Self {
        Error::Variate { variate, source: Box::new(self) }
    }

    /// Strips variate context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Variate { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by the caller's configuration or input files.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidConfig { .. }
                | Error::InfeasibleCensus(_)
                | Error::Shape { .. }
                | Error::Checksum { .. }
                | Error::Version { .. }
                | Error::Malformed { .. }
        )
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidConfig { .. } => "invalid_config",
            Error::InfeasibleCensus(_) => "infeasible_census",
            Error::Degenerate { .. } => "degenerate",
            Error::Sampling(_) => "sampling",
            Error::Shape { .. } => "shape",
            Error::Checksum { .. } => "checksum",
            Error::Version { .. } => "version",
            Error::Malformed { .. } => "malformed",
            Error::Singular(_) => "singular",
            Error::Unfitted => "unfitted",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Variate { .. } => unreachable!("root() strips variate context"),
        }
    }

    /// Offending configuration field, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self.root() {
            Error::InvalidConfig { field, .. } => Some(field),
            _ => None,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, a malformed config or parameters outside their domain.
    #[error("{0}")]
    Usage(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<gridlaw::Error> for CliError {
    fn from(e: gridlaw::Error) -> Self {
        match e {
            gridlaw::Error::Numeric { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

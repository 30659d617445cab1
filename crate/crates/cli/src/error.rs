use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    /// A stage needs artifacts that have not been produced.
    #[error("missing upstream stage {stage}: {detail}")]
    Dependency { stage: String, detail: String },
    /// Stored artifacts disagree with the manifest or with each other.
    #[error("artifact inconsistency: {0}")]
    Artifact(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(assist_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Dependency { .. } | CliError::Artifact(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => match e {
                assist_core::Error::Config(_) => 1,
                assist_core::Error::Numerical(_) | assist_core::Error::Numeric(_) => 3,
                _ => 2,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<assist_core::Error> for CliError {
    fn from(e: assist_core::Error) -> Self {
        match e {
            assist_core::Error::Numerical(m) => CliError::Numerical(m),
            assist_core::Error::Numeric(n) => CliError::Numerical(n.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Artifact(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

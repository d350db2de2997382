use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { section: String, line: usize },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { key: String, section: String, line: usize },
    #[error("line {line}: duplicate key `{key}` in [{section}]")]
    DuplicateKey { key: String, section: String, line: usize },
    #[error("invalid value {value:?} for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("unknown suite `{0}` (expected prop1, prop2, prop3, prop4, upperbound, kl, bound or all)")]
    UnknownSuite(String),
    #[error("invalid configuration: {0}")]
    Invalid(#[from] flatopt::Error),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("no run.json in {}", .0.display())]
    MissingRun(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] flatopt::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration errors, 3 for failed
    /// verification, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use std::fmt;
use std::process::ExitCode;

/// Failure of a CLI command, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values or arguments. Exit 1.
    Usage(String),
    /// Input data unreadable or unusable. Exit 2.
    Data(String),
    /// A model failed to train. Exit 3.
    Training(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Training(_) => 3,
        })
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
            CliError::Training(m) => CliError::Training(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Training(m) => write!(f, "training error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dirbias_core::Error> for CliError {
    fn from(e: dirbias_core::Error) -> Self {
        if e.is_training() {
            CliError::Training(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

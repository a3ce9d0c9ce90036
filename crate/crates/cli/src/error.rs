use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid input detected before any computation; one entry per issue.
    #[error("validation failed:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    /// A computation failed or produced an unusable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<extphase::Error> for CliError {
    fn from(e: extphase::Error) -> Self {
        use extphase::Error as E;
        match e {
            E::Config(_) | E::Table(_) | E::Csv(_) => CliError::Validation(vec![e.to_string()]),
            E::Io(io) => CliError::Io(io),
            E::Numerical { message } => CliError::Numerical(message),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

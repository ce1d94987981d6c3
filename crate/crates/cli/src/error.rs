use std::fmt;

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Usage(String),
    /// Data, model or I/O failure; exit code 1.
    Run(windcast::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<windcast::Error> for CliError {
    fn from(e: windcast::Error) -> Self {
        CliError::Run(e)
    }
}

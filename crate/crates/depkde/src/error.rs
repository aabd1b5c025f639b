use std::fmt::Display;

/// Errors surfaced by the command line tool, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("input error: {0}")]
    Input(String),

    #[error("method failed: {0}")]
    Method(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) => 2,
            CliError::Method(_) => 3,
            CliError::Config(_) => 4,
        }
    }

    pub fn input(msg: impl Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn config(msg: impl Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn method(msg: impl Display) -> Self {
        CliError::Method(msg.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

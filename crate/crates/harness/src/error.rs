use std::fmt::Display;

/// Failure of a CLI command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: unreadable or invalid config/spec. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Failure while running or writing results. Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Display) -> Self {
        Self::Config(msg.to_string())
    }

    pub fn runtime(msg: impl Display) -> Self {
        Self::Runtime(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

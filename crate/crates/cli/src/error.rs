//! CLI error type mapping every failure onto a process exit code.

use alarmsift_core::ErrorCategory;

/// A failure with the exit-code class it belongs to: configuration problems
/// exit 2, data problems 3, network problems 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Network(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Network(_) => 4,
        }
    }

    /// Prefixes the message with stage or dataset context.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
            CliError::Network(m) => CliError::Network(format!("{what}: {m}")),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Network(m) => write!(f, "network error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<alarmsift_core::Error> for CliError {
    fn from(e: alarmsift_core::Error) -> Self {
        let message = e.to_string();
        match e.category() {
            ErrorCategory::Config => CliError::Config(message),
            ErrorCategory::Data => CliError::Data(message),
            ErrorCategory::Network => CliError::Network(message),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

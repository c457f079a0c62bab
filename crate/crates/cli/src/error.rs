use thiserror::Error;

/// Failures surfaced to the shell, each with a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad manifest, flag or input data.
    #[error("{0}")]
    Config(String),
    /// The requested circuit does not fit the simulator.
    #[error("{0}")]
    Capacity(String),
    #[error("{0}")]
    Io(String),
    /// The factoring loop ran out of attempts.
    #[error("{0}")]
    CapExhausted(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Capacity(_) => 2,
            CliError::Io(_) => 3,
            CliError::CapExhausted(_) => 4,
        }
    }
}

impl From<shorcert::Error> for CliError {
    fn from(e: shorcert::Error) -> Self {
        match e {
            shorcert::Error::Capacity(_) => CliError::Capacity(e.to_string()),
            shorcert::Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

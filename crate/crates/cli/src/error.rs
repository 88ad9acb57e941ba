use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Compute(#[from] dunkl_annulus::Error),
}

impl CliError {
    /// 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax(_) | CliError::Invalid(_) | CliError::Read { .. } => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Syntax(_) => "syntax",
            CliError::Invalid(_) => "invalid_config",
            CliError::Read { .. } => "read",
            CliError::Output(_) => "output",
            CliError::Compute(_) => "compute",
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    /// A scenario precondition failed; the message names the rule.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("check failure: {} check(s) failed: {}", .0.len(), .0.join(", "))]
    CheckFailure(Vec<String>),

    #[error("computation error: {0}")]
    Compute(#[from] dressing_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailure(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Compute(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed JSON: {0}")]
    Parse(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("bad argument: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] monodromy::Error),
}

impl CliError {
    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "malformed-json",
            CliError::Schema(_) => "schema",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.reason(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => crate::EXIT_NUMERIC,
            _ => crate::EXIT_INVALID,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tpgraph_core::Error),

    /// Bad input files, flags or configuration.
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for input or configuration problems, 3 for failures while computing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Input(_) => 2,
            CliError::Core(_) | CliError::Runtime(_) => 3,
        }
    }
}

pub(crate) fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

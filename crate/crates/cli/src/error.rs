use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] banditlb::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed checks: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl CliError {
    /// 1 for failed checks and runtime failures, 2 for bad input, 3 for capacity.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                banditlb::Error::Argument(_) | banditlb::Error::Structural(_) => 2,
                banditlb::Error::Capacity(_) => 3,
                banditlb::Error::Hypotheses(_) => 1,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}

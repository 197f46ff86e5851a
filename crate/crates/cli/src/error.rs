use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cli::config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] gff4::Error),
    #[error("cli::output: {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cli::output: csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 for rejected parameters, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(e) => match e {
                gff4::Error::Domain { .. } | gff4::Error::Geometry { .. } | gff4::Error::Precondition { .. } => 1,
                _ => 2,
            },
            CliError::Io { .. } | CliError::Csv(_) => 2,
        }
    }
}

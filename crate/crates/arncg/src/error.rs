use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] arncg_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => crate::EXIT_USAGE,
            CliError::Solver(arncg_core::Error::UnknownProblem(_))
            | CliError::Solver(arncg_core::Error::IncompatibleDimension { .. })
            | CliError::Solver(arncg_core::Error::InvalidParameter { .. })
            | CliError::Solver(arncg_core::Error::DimensionMismatch { .. })
            | CliError::Solver(arncg_core::Error::EmptyPoint) => crate::EXIT_USAGE,
            CliError::Solver(_) => crate::EXIT_NUMERICAL_FAILURE,
            CliError::Io { .. } | CliError::Json { .. } | CliError::Csv { .. } => crate::EXIT_USAGE,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad, missing or unreadable configuration; exit code 2, as are
    /// output failures.
    #[error("configuration error: {0}")]
    Config(String),
    /// Quadrature, root finding or inversion failed; exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(#[from] wingsmile_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

use thiserror::Error;

/// Failures mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files: exit 1.
    #[error("{0}")]
    Validation(String),
    /// A solver failed or a result is inconsistent: exit 2.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<davydov::Error> for CliError {
    fn from(e: davydov::Error) -> Self {
        use davydov::Error as E;
        match e {
            E::Solver(_) | E::NoConvergence { .. } | E::Aborted { .. } | E::Consistency(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json: {e}"))
    }
}

use thiserror::Error;

/// Failures that end a command, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration.
    #[error("input error: {0}")]
    Input(String),
    /// The requested work exceeds the node budget.
    #[error("budget exceeded: {required} nodes needed, budget is {budget}")]
    Budget {
        /// Nodes the computation needs.
        required: u64,
        /// Nodes allowed.
        budget: u64,
    },
    /// Writing the report failed.
    #[error("cannot write report: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Output(_) => 2,
            CliError::Budget { .. } => 3,
        }
    }
}

impl From<myopic_core::Error> for CliError {
    fn from(e: myopic_core::Error) -> Self {
        match e {
            myopic_core::Error::Budget { required, budget } => {
                CliError::Budget { required, budget }
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

use std::fmt;

/// Failures mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Verification(String),
    /// Exit 3.
    Input(String),
    /// Exit 4.
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 2,
            CliError::Input(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl From<remetric::Error> for CliError {
    fn from(e: remetric::Error) -> Self {
        if e.is_resource() {
            CliError::Resource(e.to_string())
        } else if matches!(e, remetric::Error::ConditionViolated(_)) {
            CliError::Verification(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

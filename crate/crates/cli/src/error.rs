use thiserror::Error;

/// Failure of a command, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<bcpp::Error> for CliError {
    fn from(e: bcpp::Error) -> Self {
        use bcpp::Error as E;
        let msg = e.to_string();
        match e {
            E::Io(_) => CliError::Io(msg),
            E::Degenerate(_) | E::Consistency(_) | E::Numeric(_) => CliError::Numeric(msg),
            E::Domain(_) | E::InvalidParameter(_) | E::Input(_) | E::Unsupported(_) | E::Parse(_) => {
                CliError::Validation(msg)
            }
        }
    }
}

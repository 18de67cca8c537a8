use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] ionjcm::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(ionjcm::Error::NotAtRoot { .. } | ionjcm::Error::KernelNotFound { .. }) => {
                EXIT_VERIFICATION
            }
            CliError::Numerical(_) | CliError::Io { .. } => EXIT_NUMERICAL,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }

    /// Reclassifies a library error caused by user-supplied values.
    pub fn usage(e: ionjcm::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

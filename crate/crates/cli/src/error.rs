use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: row {row}, column '{column}': {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("missing truth file {truth} for {fit}")]
    Pairing { fit: PathBuf, truth: PathBuf },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Parse { .. } | CliError::Format { .. } => 3,
            CliError::Dimension(_) => 4,
            CliError::Degenerate(_) => 5,
            CliError::Pairing { .. } => 6,
            CliError::Invalid(_) => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<coxph_susie::Error> for CliError {
    fn from(e: coxph_susie::Error) -> Self {
        use coxph_susie::Error as E;
        match e {
            E::InvalidArgument(m) | E::RatePositivity(m) => CliError::Invalid(m),
            E::Dimension(m) => CliError::Dimension(m),
            E::DegenerateData(m) | E::SingularDesign(m) => CliError::Degenerate(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use thiserror::Error;
use wordverify::calibration::CalibrationError;
use wordverify::corpus_io::CorpusError;
use wordverify::frontend::FrontendError;
use wordverify::matcher::MatchError;
use wordverify::model::ModelError;
use wordverify::stats::StatsError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("no templates enrolled for word '{0}'")]
    MissingTemplate(String),
    #[error("no synthetic entry for '{0}'")]
    MissingSynthetic(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl CliError {
    /// Process exit status. 2 is shared with argument parsing failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Format { .. } => 4,
            CliError::Corpus(_) => 10,
            CliError::Frontend(_) => 11,
            CliError::Model(_) => 12,
            CliError::MissingSynthetic(_) => 13,
            CliError::Match(_) => 14,
            CliError::MissingTemplate(_) => 15,
            CliError::Calibration(_) => 16,
            CliError::Stats(_) => 17,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn format(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        CliError::Format {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

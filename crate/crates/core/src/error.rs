use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing resource file: {0}")]
    MissingResource(PathBuf),

    #[error("config: {0}")]
    Config(String),

    /// Parse error in a line-oriented input file (corpus, lexicons, vectors).
    #[error("{file}: line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    /// Malformed line in a prediction file.
    #[error("predictions: line {line}: {message}")]
    PredictionFormat { line: usize, message: String },

    #[error("model: line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("model version mismatch: expected {expected}, found {found}")]
    ModelVersion { expected: String, found: String },

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("unknown id {0}")]
    UnknownId(String),

    #[error("unlabeled instance {0}")]
    Unlabeled(String),

    #[error("non-finite score for {0}")]
    NonFiniteScore(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("inconsistent feature names: {0}")]
    InconsistentFeatures(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("no ranking signal")]
    NoRankingSignal,

    #[error("no evaluable queries")]
    NoEvaluableQueries,

    #[error("missing prediction for {0}")]
    MissingPrediction(String),

    #[error("unexpected prediction for {0}")]
    ExtraPrediction(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration and I/O problems, 1 for data
    /// and validation errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::MissingResource(_)
            | Error::Config(_)
            | Error::PredictionFormat { .. } => 2,
            _ => 1,
        }
    }
}

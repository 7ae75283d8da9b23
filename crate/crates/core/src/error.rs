use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("CoNLL-U line {line}: {message}")]
    Conllu { line: usize, message: String },

    #[error("invalid tree: {0}")]
    Tree(String),

    #[error("insufficient data for split: {0}")]
    Split(String),

    #[error("document {doc_id} has no dependency parse; grammar features need one")]
    MissingParse { doc_id: String },

    #[error("unknown document: {0}")]
    UnknownDocument(String),

    #[error("vocabulary: {0}")]
    Vocabulary(String),

    #[error("training: {0}")]
    Training(String),

    #[error("dimension mismatch: model has {expected} features, vector has {found}")]
    Dimension { expected: usize, found: usize },

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

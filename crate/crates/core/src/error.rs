use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: malformed record: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dialogue {dialogue_id}, utterance {utterance}: {message}")]
    Validation {
        dialogue_id: String,
        utterance: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,

    #[error("no commonsense entailments cached for text {0:?}")]
    MissingEntailment(String),

    #[error("commonsense service error: {0}")]
    Service(String),

    #[error("token id {id} is outside the vocabulary of size {vocab_size}")]
    InvalidToken { id: u32, vocab_size: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("oracle strategy requested without a gold label")]
    MissingGold,

    #[error("length mismatch: {left} candidates vs {right} references")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dialogue {dialogue_id}: {source}")]
    InDialogue {
        dialogue_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

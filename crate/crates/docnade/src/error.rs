use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty document")]
    EmptyDocument,
    #[error("empty document set")]
    EmptyDocumentSet,
    #[error("degenerate vocabulary: need at least 2 words, got {0}")]
    DegenerateVocabulary(usize),
    #[error("unknown word id {id} for vocabulary of size {vocab_size}")]
    UnknownWord { id: u32, vocab_size: usize },
    #[error("word {0} has zero frequency; smooth counts to at least 1")]
    ZeroFrequency(u32),
    #[error("shape mismatch for `{name}`: expected {expected}, got {got}")]
    ShapeMismatch {
        name: String,
        expected: String,
        got: String,
    },
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("enumeration bound exceeded: document length {0} > 8")]
    EnumerationBound(usize),
    #[error("empty target side")]
    EmptyTargetSide,
    #[error("loss function is not deterministic")]
    NonDeterministicLoss,
    #[error("history of length {history_len} does not match position {position}")]
    HistoryMismatch { history_len: usize, position: usize },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("corrupt model file at byte {offset}: {message}")]
    CorruptModel { offset: u64, message: String },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version `{0}`")]
    UnsupportedVersion(String),
    #[error(
        "vocabulary hash mismatch: model was trained with {expected:#018x}, \
         this vocabulary hashes to {actual:#018x}"
    )]
    VocabHashMismatch { expected: u64, actual: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attaches a path to an I/O error.
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}

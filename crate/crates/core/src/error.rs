use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no usable reviews in {0}")]
    NoReviews(PathBuf),
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("infeasible synthetic configuration: {0}")]
    Infeasible(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u64 },
    #[error("model configuration error: {0}")]
    Config(String),
    #[error("model file error: {0}")]
    ModelFormat(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("sampling support exhausted: {0}")]
    SupportExhausted(String),
    #[error("frozen and reranked lists overlap on item {0}")]
    Overlap(u32),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

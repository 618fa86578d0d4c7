use std::path::PathBuf;

/// Coarse classification used by callers that must pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Missing, unreadable, or malformed input files.
    Input,
    /// Structurally valid inputs naming things that do not exist or cannot be computed.
    Data,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("unknown term {term:?}{}", suggest_suffix(.suggestions))]
    UnknownTerm {
        term: String,
        suggestions: Vec<String>,
    },
    #[error("doc_id {0:?} not found in corpus")]
    UnknownDoc(String),
    #[error("document {doc_id:?} ineligible for passage scoring: {reason}")]
    IneligibleDoc { doc_id: String, reason: String },
    #[error("model format version {found:?} unsupported (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },
    #[error("{file}: {msg}")]
    ModelCorrupt { file: String, msg: String },
    #[error("model was stored without pair data; direct metric unavailable")]
    PairsNotStored,
    #[error("vector references term ids outside this model")]
    ModelMismatch,
    #[error("output directory {0} already exists (pass --force to replace)")]
    OutputExists(PathBuf),
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("{side} values have zero variance")]
    ZeroVariance { side: &'static str },
    #[error("empty score distribution")]
    EmptyDistribution,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero-magnitude vector")]
    ZeroVector,
    #[error("no embedding for {0:?}")]
    MissingEmbedding(String),
    #[error("fold count {k} invalid for {n} pairs")]
    BadFoldCount { k: usize, n: usize },
    #[error("build phase {phase:?} failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::Malformed { .. }
            | Error::DuplicateDocId(_)
            | Error::VersionMismatch { .. }
            | Error::ModelCorrupt { .. }
            | Error::OutputExists(_)
            | Error::Invalid(_) => ErrorClass::Input,
            Error::Phase { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}

fn suggest_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!(" (near matches: {})", suggestions.join(", "))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

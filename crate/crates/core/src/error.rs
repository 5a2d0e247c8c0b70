use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid UTF-8 in {context} at byte {offset} (pass the lossy flag to replace invalid sequences)")]
    InvalidUtf8 { context: String, offset: usize },

    #[error("malformed record framing at byte {offset}: {reason}")]
    Framing { offset: usize, reason: String },

    #[error("unknown pre-tokenizer {0:?} (expected one of: no, ws, _ws, gpt2, llama3)")]
    UnknownPreTokenizer(String),

    #[error("vocabulary size {0} is below the 256-byte base vocabulary")]
    VocabTooSmall(usize),

    #[error("cannot train on an empty corpus")]
    EmptyCorpus,

    #[error("token id {id} is out of range for a vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("invalid model file: {0}")]
    InvalidModel(String),

    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("empty distribution: no tokens were counted")]
    EmptyDistribution,

    #[error("invalid Rényi order alpha = {0} (must be positive, finite and != 1)")]
    InvalidAlpha(f64),

    #[error("normalizer vocabulary size {0} is below 2")]
    NormalizerTooSmall(usize),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("feature space would exceed the cap of {cap} features; use the shared_disjoint pair mode for long text pairs")]
    FeatureCap { cap: usize },

    #[error("logistic regression needs both classes present in the labels")]
    SingleClass,

    #[error("objective became non-finite during optimization")]
    NonFinite,

    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dataset is empty or too small (need at least 2 points, got {0})")]
    EmptyDataset(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("k = {k} too large: at most {max} neighbors available")]
    KTooLarge { k: usize, max: usize },

    #[error("k = {k} out of range 1..={k_max}")]
    KOutOfRange { k: usize, k_max: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("sample weights are all zero")]
    DegenerateWeights,

    #[error("model has no trained parameters: {0}")]
    NotFitted(&'static str),

    #[error("artifact fingerprint does not match dataset")]
    FingerprintMismatch,

    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),

    #[error("unsupported artifact version {0}")]
    VersionUnsupported(u8),

    #[error("model type `{0}` is reserved but not implemented")]
    UnsupportedModel(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    Numeric(&'static str),

    #[error("metrics file: {0}")]
    Metrics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

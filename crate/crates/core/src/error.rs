use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate interval: start {start} is not before end {end}")]
    DegenerateInterval { start: f64, end: f64 },

    #[error("overlap {0} is outside [0, 1)")]
    InvalidOverlap(f64),

    #[error("proposal references window starting at feature {start_feature} which is not in the input")]
    WindowMismatch { start_feature: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("empty score vector")]
    EmptyVector,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("action id {id} is out of range (action space has {size} ids)")]
    ActionIdOutOfRange { id: usize, size: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Errors that indicate malformed input rather than a broken internal
    /// invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::DegenerateInterval { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

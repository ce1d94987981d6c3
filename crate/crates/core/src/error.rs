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
    #[error("{path}: column {column:?} not found")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: cannot parse {value:?} as a number")]
    ParseValue { path: PathBuf, row: usize, value: String },
    #[error("{path}: empty data")]
    EmptyData { path: PathBuf },
    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("series must contain at least one value")]
    EmptySeries,
    #[error("series value at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("n_test = {n_test} must be smaller than the series length {len}")]
    SplitTooLarge { n_test: usize, len: usize },
    #[error("series too short: need at least {required} values, got {actual}")]
    SeriesTooShort { required: usize, actual: usize },
    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("embedding dimension {embed_dim} outside [2, {len}]")]
    EmbedDimOutOfRange { embed_dim: usize, len: usize },
    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    Shape {
        context: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("backward called on {0} without a recorded forward pass")]
    NoForward(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("optimizer step counter overflow")]
    StepOverflow,
    #[error("MAPE undefined: actual value at index {index} is zero")]
    ZeroActual { index: usize },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("singular value decomposition failed: {0}")]
    Svd(&'static str),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(context: &'static str, expected: &[usize], actual: &[usize]) -> Self {
        Error::Shape {
            context,
            expected: expected.to_vec(),
            actual: actual.to_vec(),
        }
    }
}

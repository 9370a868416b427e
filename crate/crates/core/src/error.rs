use thiserror::Error;

/// Errors raised anywhere in the prediction pipeline.
///
/// CSV diagnostics carry 1-based data row numbers (the header is not counted).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid variable id `{0}` (expected x1..x70)")]
    InvalidVariableId(String),
    #[error("unknown factor code `{0}`")]
    UnknownFactor(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid response scale: min {min} must be below max {max}")]
    InvalidScale { min: i64, max: i64 },

    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: value {value} is out of scale")]
    OutOfScaleValue { row: usize, column: String, value: f64 },
    #[error("row {row}, column `{column}`: cannot parse `{cell}` as a number")]
    NonNumericCell { row: usize, column: String, cell: String },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("expected a {expected} dataset, got {actual}")]
    WrongGranularity { expected: &'static str, actual: &'static str },
    #[error("feature `{0}` is constant; min-max normalization is undefined")]
    DegenerateFeature(String),
    #[error("too few samples: need at least {needed}, have {available}")]
    TooFewSamples { needed: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("missing feature `{0}`")]
    MissingFeature(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("class model {0} is singular even after ridge regularization")]
    SingularClassModel(String),
    #[error("duplicate class label {0}")]
    DuplicateClass(String),
    #[error("linear regression classification needs at least two classes, got {0}")]
    TooFewClasses(usize),

    #[error("left and right targets do not partition the node targets")]
    InvalidPartition,
    #[error("empty input")]
    EmptyInput,

    #[error("no prediction pairs")]
    EmptyPairs,
    #[error("predicted and actual lengths differ ({predicted} vs {actual})")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("relative error undefined: actual values are constant")]
    ZeroDenominator,

    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("{0}")]
    Io(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("loss {loss} requires binary outcomes and predictions, record {index} has y={y}, y_hat={y_hat}")]
    IncompatibleLoss {
        loss: &'static str,
        index: usize,
        y: f64,
        y_hat: f64,
    },

    #[error("record {index} is not binary (y={y}, y_hat={y_hat})")]
    NonBinaryData { index: usize, y: f64, y_hat: f64 },

    #[error("requested {requested} pairs but at most {max} disjoint pairs exist")]
    TooManyPairs { requested: usize, max: usize },

    #[error("exhaustive matching is capped at {cap} points, got {n}")]
    InstanceTooLarge { n: usize, cap: usize },

    #[error("exact enumeration is capped at {cap} loss-changing pairs, got {total}")]
    EnumerationTooLarge { total: usize, cap: usize },

    #[error("conditional density evaluated to {value} at pair {pair}")]
    DensityEvaluationFailure { pair: usize, value: f64 },

    #[error("predictions have zero variance, regression is degenerate")]
    DegenerateRegression,

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("column `{0}` is assigned more than one role")]
    DuplicateColumn(String),

    #[error("non-numeric cell at row {row}, column `{column}`: {value:?}")]
    NonNumericCell { row: usize, column: String, value: String },

    #[error("input file has no data rows")]
    EmptyFile,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable class name, used for CLI and FFI error reporting.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::IncompatibleLoss { .. } => "IncompatibleLoss",
            Error::NonBinaryData { .. } => "NonBinaryData",
            Error::TooManyPairs { .. } => "TooManyPairs",
            Error::InstanceTooLarge { .. } => "InstanceTooLarge",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::DensityEvaluationFailure { .. } => "DensityEvaluationFailure",
            Error::DegenerateRegression => "DegenerateRegression",
            Error::MissingColumn(_) => "MissingColumn",
            Error::DuplicateColumn(_) => "DuplicateColumn",
            Error::NonNumericCell { .. } => "NonNumericCell",
            Error::EmptyFile => "EmptyFile",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }
}

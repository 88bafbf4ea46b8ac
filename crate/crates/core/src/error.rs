use thiserror::Error;

/// Errors produced by dataset handling, projection, transport and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("invalid rate {0}: must be positive and finite")]
    InvalidRate(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A scaled moment left the range of 64-bit floats.
    #[error("moment overflow (projection {projection:?}, class {class:?}, lambda {lambda})")]
    MomentOverflow {
        projection: Option<usize>,
        class: Option<i64>,
        lambda: u32,
    },

    #[error("invalid order p = {0}: must be >= 1")]
    InvalidOrder(f64),

    #[error("mass mismatch: {0}")]
    MassMismatch(String),

    #[error("sketch fingerprints differ")]
    FingerprintMismatch,

    #[error("instance of size {n}x{m} exceeds the exact solver limit")]
    ScaleExceeded { n: usize, m: usize },

    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("non-positive input to log-log fit")]
    NonPositiveInput,

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("ragged rows: row {row} has {got} columns, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },

    #[error("label column {0} not found")]
    MissingLabelColumn(String),

    #[error("bad magic number")]
    BadMagic,

    #[error("file is truncated or has trailing bytes")]
    TruncatedFile,

    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),

    #[error("count mismatch: {0} images vs {1} labels")]
    CountMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the grouping pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no such file: {}", .0.display())]
    NoSuchFile(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric or non-finite cell in row {row}, column `{column}`: {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("file contains no data rows")]
    EmptyFile,

    #[error("fleet needs at least two entities, found {0}")]
    SingleEntity(usize),

    #[error("invalid fleet: {0}")]
    InvalidFleet(String),

    #[error("underdetermined fit: {rows} observations for {coefficients} coefficients")]
    Underdetermined { rows: usize, coefficients: usize },

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("eigensolver did not converge within {0} iterations")]
    ConvergenceFailure(usize),

    #[error("{failed} of {total} sweep records failed; first at {detail}")]
    RecordFailures { failed: usize, total: usize, detail: String },

    #[error("too few observations: {0}")]
    TooFewObservations(String),

    #[error("validation set of group {0} is empty")]
    EmptyValidation(usize),

    #[error("elbow detection needs at least 3 distinct community counts, found {0}")]
    TooFewPoints(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

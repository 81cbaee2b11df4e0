use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: schema mismatch: missing metric column `{metric}`")]
    MissingMetric { path: PathBuf, metric: String },
    #[error("{path}: schema mismatch: unexpected column `{column}`")]
    ExtraColumn { path: PathBuf, column: String },
    #[error("{path}: column `{column}` appears more than once")]
    DuplicateColumn { path: PathBuf, column: String },
    #[error("{path}: no defect column (expected `bug` or `defects`)")]
    MissingDefectColumn { path: PathBuf },
    #[error("{path}: both `bug` and `defects` columns present")]
    AmbiguousDefectColumn { path: PathBuf },
    #[error("{path}: row {row}, column `{column}`: `{value}` is not a non-negative number")]
    BadCell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: row {row}: defect count `{value}` is not a non-negative integer")]
    BadDefectCount {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("table is empty")]
    EmptyTable,
    #[error("version `{0}` not found")]
    VersionNotFound(String),
    #[error("version `{0}` appears in more than one table")]
    DuplicateVersion(String),
    #[error("no versions precede `{0}`: no training data")]
    NoTrainingData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("both classes must be present ({0})")]
    SingleClass(&'static str),
    #[error("{0} is undefined: test table has no {1} rows")]
    UndefinedRate(&'static str, &'static str),
    #[error("no usable datasets")]
    NoUsableDatasets,
}

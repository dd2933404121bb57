use std::path::PathBuf;

use crate::timeseries::MonthIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: cannot read file: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file has no data rows")]
    EmptyFile { path: PathBuf },
    #[error("{path}: bad header {found:?}, expected \"month,value\"")]
    BadHeader { path: PathBuf, found: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}:{line}: duplicate month {month}")]
    DuplicateMonth {
        path: PathBuf,
        line: u64,
        month: MonthIndex,
    },
    #[error("{path}: gap in series, month {missing} is missing")]
    Gap { path: PathBuf, missing: MonthIndex },
    #[error("{path}:{line}: value {value} is implausible for unit {unit}")]
    UnitMismatch {
        path: PathBuf,
        line: u64,
        value: f64,
        unit: String,
    },
    #[error("invalid month {0:?}, expected YYYY-MM")]
    InvalidMonth(String),
    #[error("interpolation needs at least 2 anchors, got {0}")]
    TooFewAnchors(usize),
    #[error("anchors must be strictly increasing: {prev} is followed by {next}")]
    NonMonotoneAnchors { prev: MonthIndex, next: MonthIndex },
    #[error("series ranges do not overlap")]
    EmptyIntersection,
    #[error("series are not aligned: {0}")]
    Misaligned(String),
    #[error("month {month} is outside the coverage of series {series}")]
    OutOfCoverage { series: String, month: MonthIndex },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("series {0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("zero total: {0}")]
    ZeroTotal(&'static str),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for failures caused by bad input data or arguments, as opposed
    /// to broken internal invariants.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}

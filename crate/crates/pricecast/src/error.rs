//! Crate-wide error type.
//!
//! Variants are grouped by the exit code the CLI maps them to:
//! configuration/usage problems (1), data problems (2), and numeric
//! failures such as non-convergence or divergence (3).

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // -- configuration / usage -------------------------------------------
    #[error("config error: {0}")]
    Config(String),

    #[error("config fingerprint mismatch: artifact was produced with {artifact}, current config is {current}")]
    FingerprintMismatch { artifact: String, current: String },

    // -- data -------------------------------------------------------------
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("unparseable date {0:?}")]
    UnparseableDate(String),

    #[error("duplicate date {0}")]
    DuplicateDate(chrono::NaiveDate),

    #[error("no usable rows ({dropped} rows dropped as empty or null)")]
    ZeroUsableRows { dropped: usize },

    #[error("{part} partition is empty")]
    EmptyPartition { part: &'static str },

    #[error("constant series: min == max, cannot scale")]
    ConstantSeries,

    #[error("sequence too short: need more than {need}, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("checkpoint parse error: {0}")]
    Checkpoint(String),

    // -- numeric ------------------------------------------------------------
    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    #[error("optimizer failed to converge after {iterations} iterations (objective {objective})")]
    NonConvergence { iterations: usize, objective: f64 },

    #[error("all {cells} grid cells failed to fit")]
    AllCellsFailed { cells: usize },

    #[error("standard errors unavailable: {0}")]
    MissingStderrs(&'static str),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    /// Exit code the CLI reports for this error: 1 usage/config, 2 data,
    /// 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::FingerprintMismatch { .. } => 1,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::UnparseableDate(_)
            | Error::DuplicateDate(_)
            | Error::ZeroUsableRows { .. }
            | Error::EmptyPartition { .. }
            | Error::ConstantSeries
            | Error::TooShort { .. }
            | Error::LengthMismatch { .. }
            | Error::NonFinite(_)
            | Error::Empty(_)
            | Error::Checkpoint(_) => 2,
            Error::SingularMatrix(_)
            | Error::NonConvergence { .. }
            | Error::AllCellsFailed { .. }
            | Error::MissingStderrs(_)
            | Error::Divergence { .. }
            | Error::DimensionMismatch(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

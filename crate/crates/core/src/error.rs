use std::path::PathBuf;

use thiserror::Error;

use crate::optimize::ObjectiveTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("size out of range: {0}")]
    Size(String),

    #[error(
        "graph generation failed: no connected graph after {attempts} attempts (n={n}, p={p})"
    )]
    GenerationFailed { n: usize, p: f64, attempts: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed record at row {row}: {message}")]
    Record { row: usize, message: String },

    #[error("parameter binding failed: {0}")]
    Binding(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("oracle violation: cut {cut} exceeds optimal cut {optimal}")]
    OracleViolation { cut: usize, optimal: usize },

    #[error("objective returned non-finite value {value} at evaluation {index}")]
    NonFiniteObjective {
        index: usize,
        value: f64,
        trace: ObjectiveTrace,
    },

    #[error("simplex became numerically degenerate (inverse error {0:.3e})")]
    DegenerateSimplex(f64),

    #[error("filter error: {0}")]
    Filter(String),

    #[error("missing trace file for run {run_id}: {}", path.display())]
    MissingTrace { run_id: String, path: PathBuf },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

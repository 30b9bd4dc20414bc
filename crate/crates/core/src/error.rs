use std::path::PathBuf;

use crate::config::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {}", join_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("instance has {count} binary variables, limit is {limit}")]
    BinaryLimit { count: usize, limit: usize },

    #[error("emission failed: {0}")]
    Emit(String),

    #[error("cannot parse solver output: {0}")]
    Parse(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("planning problem is {status}; instance written to {}", .instance.display())]
    NoPlan { status: String, instance: PathBuf },

    #[error("program extraction failed: {0}")]
    Extraction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

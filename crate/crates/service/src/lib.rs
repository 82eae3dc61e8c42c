//! Theorem search service: corpus pipeline (ingest, sloganize, embed,
//! index), HTTP API and evaluation runner on top of `thmdx-core`.

pub mod api;
pub mod cli;
pub mod config;
pub mod engine;
pub mod evaluation;
pub mod feedback;
pub mod jsonl;
pub mod pipeline;
pub mod providers;

use std::path::PathBuf;

use thiserror::Error;
use thmdx_core::eval::EvalError;
use thmdx_core::index::IndexError;

pub use config::ServiceConfig;
pub use engine::SearchEngine;

/// Version tag carried by every HTTP response.
pub const API_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("missing input {}: run the `{stage}` stage first", path.display())]
    MissingInput { path: PathBuf, stage: &'static str },
    #[error("no theorem records extracted")]
    NoRecords,
    #[error("{0}")]
    Invalid(String),
}

impl ServiceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }
}

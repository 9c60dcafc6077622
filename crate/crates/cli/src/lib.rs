//! Library side of the `gridcert` binary: spec parsing, output formatting and command dispatch.

pub mod args;
mod commands;
pub mod output;
pub mod spec_io;

pub use commands::{run, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at \"{pointer}\": {reason}")]
    Schema { pointer: String, reason: String },
    #[error("index error at \"{pointer}\": {reason}")]
    Index { pointer: String, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gridcert::Error),
}

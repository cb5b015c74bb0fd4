//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Text-format parse failure with a 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Geometry too degenerate to operate on (coincident points, zero area, ...).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// A point cloud is too small for the requested descriptor.
    #[error("need \u{2265} {min} points for {what} (got {got})")]
    CloudTooSmall {
        min: usize,
        got: usize,
        what: &'static str,
    },

    /// Tensor or layer dimensions do not agree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Binary file format violation (bad magic, truncation, field mismatch).
    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{0}")]
    Invalid(String),
}

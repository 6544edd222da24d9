//! Crate-wide error type.
//!
//! Variants are grouped by how a caller should react: configuration errors
//! mean the request itself was malformed, data errors mean an input file or
//! stream failed validation, numeric errors mean a computation produced
//! something unusable (NaN loss, degenerate fit). The CLI maps these groups
//! onto distinct exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("STL parse error: {0}")]
    StlFormat(String),

    #[error("mesh is not watertight: {count} boundary edge(s), first few: {sample:?}")]
    NotWatertight {
        count: usize,
        sample: Vec<(usize, usize)>,
    },

    #[error("degenerate face {face}: zero area")]
    DegenerateFace { face: usize },

    #[error("patch label error: {0}")]
    Labels(String),

    #[error("patch '{patch}' has no usable content: {reason}")]
    EmptyPatch { patch: String, reason: String },

    #[error("query point {point:?} outside grid interior domain")]
    OutOfDomain { point: [f64; 3] },

    #[error("file format error: {0}")]
    Format(String),

    #[error("checksum mismatch: {0}")]
    Checksum(String),

    #[error("schema version mismatch: file has {found}, this build expects {expected}")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("frame tag error: {0}")]
    Frame(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("timestamp gaps exceed tolerance: {0:?}")]
    TimestampGaps(Vec<(f64, f64)>),

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl Error {
    /// Exit-code group for the CLI.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Config(_) | Shape(_) => ErrorClass::Config,
            Numeric(_) | NonFiniteLoss { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}

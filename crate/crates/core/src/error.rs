//! Crate-wide error type. Each variant names the violated contract.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sold price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("category id {0} outside 1..=13")]
    BadCategory(u32),
    #[error("{context}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("input is empty")]
    EmptyInput,
    #[error("trim fraction must lie in [0, 1), got {0}")]
    BadFraction(f64),
    #[error("split ratios must be nonnegative and sum to 1, got ({0}, {1}, {2})")]
    BadRatios(f64, f64, f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("bad layer dims: {0}")]
    BadDims(String),
    #[error("forward cache does not match this model")]
    StaleCache,
    #[error("gradient/optimizer shape mismatch at layer {0}")]
    ShapeMismatch(usize),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("bad schedule: {0}")]
    BadSchedule(String),
    #[error("training set is empty")]
    EmptyData,
    #[error("non-finite loss {value} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        value: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint magic")]
    BadMagic,
    #[error("unsupported checkpoint format version {0}")]
    VersionMismatch(u32),
    #[error("checkpoint checksum mismatch")]
    ChecksumMismatch,
    #[error("ground-truth flags are all one class")]
    DegenerateTruth,
    #[error("parse error: {0}")]
    Parse(String),
}

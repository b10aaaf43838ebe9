//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by tensor I/O, graph construction, and scoring.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("target unit {unit} out of range for vocabulary of size {vocab}")]
    UnitOutOfRange { unit: i64, vocab: usize },

    #[error("index {index} out of range for axis of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bad magic: expected `RNTL` header")]
    BadMagic,

    #[error("unknown format version {0}")]
    UnknownVersion(u8),

    #[error("unknown dtype code {0}")]
    UnknownDtype(u8),

    #[error("dimension overflow: dims do not fit in memory or do not match payload")]
    DimensionOverflow,

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("composition requires arc-sorted operands")]
    UnsortedCompose,

    #[error("epsilon label in composition operand; this engine is epsilon-free")]
    EpsilonInCompose,

    #[error("both composition operands define {field} on a matched arc pair")]
    AuxConflict { field: &'static str },

    #[error("graph contains a cycle")]
    CyclicGraph,

    #[error("arc binding (t={t}, u={u}, v={v}) out of range for tensor shape {shape:?}")]
    BindingOutOfRange {
        t: usize,
        u: usize,
        v: usize,
        shape: [usize; 3],
    },

    #[error("scored arc with label {label} lacks a (time, unit) binding")]
    UnboundScoredArc { label: i32 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("lattice admits no start-to-final path")]
    NoPath,

    #[error("path enumeration cap of {cap} exceeded (lattice has {count} paths)")]
    PathCapExceeded { cap: u64, count: String },

    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

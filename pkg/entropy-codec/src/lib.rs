//! Bit-exact entropy coding for integer latent symbols.
//!
//! A carry-less range coder (32-bit state, byte-wise renormalization) over
//! immutable 16-bit cumulative-frequency tables.  The coder is integer-only
//! and deterministic: the same symbols, contexts and table blob produce the
//! same bytes on every platform, byte-for-byte equal to the slow reference
//! coder they mirror.
//!
//! Tables travel as a little-endian blob (see [`tables::TableSet::from_blob`]);
//! [`capi`] exposes the encode/decode entry points over a C ABI.

pub mod capi;
pub mod gaussian;
pub mod range;
pub mod tables;

pub use range::{decode, encode, RangeDecoder, RangeEncoder};
pub use tables::{CdfTable, TableSet, PRECISION, TOTAL};

/// Everything that can go wrong while parsing tables or coding symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    /// Malformed or internally inconsistent table blob.
    BadBlob(String),
    /// A context index names a table the set does not hold.
    BadContext { position: usize, context: u16, tables: usize },
    /// A symbol lies outside its table's support.
    OutOfSupport { position: usize, value: i32, lo: i32, hi: i32 },
    /// The payload ended before all symbols were decoded.
    Truncated { at: usize, len: usize },
    /// Mismatched symbol/context counts or invalid slice bounds.
    BadInput(String),
}

impl std::fmt::Display for CodecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CodecError::BadBlob(msg) => write!(f, "bad table blob: {msg}"),
            CodecError::BadContext { position, context, tables } => write!(
                f,
                "context {context} at position {position} outside table set of {tables}"
            ),
            CodecError::OutOfSupport { position, value, lo, hi } => write!(
                f,
                "symbol {value} at position {position} outside table support [{lo}, {hi}]"
            ),
            CodecError::Truncated { at, len } => {
                write!(f, "payload exhausted at byte {at} of {len}")
            }
            CodecError::BadInput(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CodecError {}

//! Integer CDF tables and the little-endian blob that carries them.
//!
//! Blob layout: `precision u8, num_tables u16`, then per table
//! `offset i32, len u16, cdf u16[len+1]` with the final 65536 stored as 0.
//! Parsing is strict — trailing bytes, non-monotone CDFs or a foreign
//! precision are errors, and a parsed set hashes to the same table id as
//! the blob it came from.

use sha2::{Digest, Sha256};

use crate::CodecError;

/// Probability precision in bits; cumulative frequencies live in [0, 2^16].
pub const PRECISION: u8 = 16;
/// One past the largest cumulative frequency.
pub const TOTAL: u32 = 1 << 16;

/// One symbol distribution: integer support plus cumulative masses.
#[derive(Debug, Clone)]
pub struct CdfTable {
    offset: i32,
    cdf: Vec<u32>,
    max_slice: (u32, u32),
}

impl CdfTable {
    /// Validates monotonicity and the [0, 65536] span, and locates the most
    /// probable slice (first one on ties) that receives the coder's
    /// truncation residue.
    pub fn new(offset: i32, cdf: Vec<u32>) -> Result<Self, CodecError> {
        if cdf.len() < 2 {
            return Err(CodecError::BadBlob("cdf needs at least two entries".into()));
        }
        if cdf[0] != 0 || *cdf.last().unwrap() != TOTAL {
            return Err(CodecError::BadBlob(
                "cdf must rise strictly from 0 to 65536".into(),
            ));
        }
        let mut widest = 0usize;
        let mut widest_mass = 0u32;
        for i in 0..cdf.len() - 1 {
            if cdf[i + 1] <= cdf[i] {
                return Err(CodecError::BadBlob(
                    "cdf must rise strictly from 0 to 65536".into(),
                ));
            }
            let mass = cdf[i + 1] - cdf[i];
            if mass > widest_mass {
                widest_mass = mass;
                widest = i;
            }
        }
        let max_slice = (cdf[widest], cdf[widest + 1]);
        Ok(CdfTable { offset, cdf, max_slice })
    }

    /// Number of symbols in the support.
    pub fn len(&self) -> usize {
        self.cdf.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false // a valid table always holds at least one symbol
    }

    /// Smallest and largest codable symbol value.
    pub fn support(&self) -> (i32, i32) {
        (self.offset, self.offset + self.len() as i32 - 1)
    }

    /// Cumulative slice of the most probable symbol.
    pub fn max_slice(&self) -> (u32, u32) {
        self.max_slice
    }

    /// Cumulative slice [lo, hi) of a symbol value, or its support error.
    pub fn cum_range(&self, value: i32, position: usize) -> Result<(u32, u32), CodecError> {
        let bin = value as i64 - self.offset as i64;
        if bin < 0 || bin >= self.len() as i64 {
            let (lo, hi) = self.support();
            return Err(CodecError::OutOfSupport { position, value, lo, hi });
        }
        let bin = bin as usize;
        Ok((self.cdf[bin], self.cdf[bin + 1]))
    }

    /// Symbol value whose slice contains the cumulative target.
    pub fn value_of_target(&self, target: u32) -> i32 {
        // partition_point returns the count of entries <= target, so the
        // containing bin is one below it; target < 65536 keeps it in range.
        let bin = self.cdf.partition_point(|&c| c <= target) - 1;
        self.offset + bin as i32
    }

    /// Cumulative slice of a bin index (already validated).
    pub(crate) fn slice_of_bin(&self, bin: usize) -> (u32, u32) {
        (self.cdf[bin], self.cdf[bin + 1])
    }

    pub(crate) fn bin_of_value(&self, value: i32) -> usize {
        (value - self.offset) as usize
    }
}

/// An immutable, order-significant collection of tables plus its blob.
#[derive(Debug, Clone)]
pub struct TableSet {
    tables: Vec<CdfTable>,
    blob: Vec<u8>,
}

impl TableSet {
    /// Builds a set from tables constructed in-process and serializes them
    /// into the canonical blob (final 65536 stored as 0).
    pub fn from_tables(tables: Vec<CdfTable>) -> Result<Self, CodecError> {
        if tables.is_empty() || tables.len() > 0xFFFF {
            return Err(CodecError::BadInput(format!(
                "table set must hold 1..65535 tables, got {}",
                tables.len()
            )));
        }
        let mut blob = Vec::new();
        blob.push(PRECISION);
        blob.extend_from_slice(&(tables.len() as u16).to_le_bytes());
        for t in &tables {
            blob.extend_from_slice(&t.offset.to_le_bytes());
            blob.extend_from_slice(&(t.len() as u16).to_le_bytes());
            for &c in &t.cdf {
                blob.extend_from_slice(&((c % TOTAL) as u16).to_le_bytes());
            }
        }
        Ok(TableSet { tables, blob })
    }

    /// Parses the canonical blob; the original bytes are kept so the table
    /// id hashes exactly what was transmitted.
    pub fn from_blob(blob: &[u8]) -> Result<Self, CodecError> {
        if blob.len() < 3 {
            return Err(CodecError::BadBlob("blob shorter than its header".into()));
        }
        let precision = blob[0];
        if precision != PRECISION {
            return Err(CodecError::BadBlob(format!(
                "unsupported table precision {precision}"
            )));
        }
        let count = u16::from_le_bytes([blob[1], blob[2]]) as usize;
        if count == 0 {
            return Err(CodecError::BadBlob("table set holds no tables".into()));
        }
        let mut pos = 3usize;
        let mut tables = Vec::with_capacity(count);
        for _ in 0..count {
            if pos + 6 > blob.len() {
                return Err(CodecError::BadBlob("blob ends inside a table header".into()));
            }
            let offset = i32::from_le_bytes(blob[pos..pos + 4].try_into().unwrap());
            let n = u16::from_le_bytes([blob[pos + 4], blob[pos + 5]]) as usize;
            pos += 6;
            let end = pos + 2 * (n + 1);
            if end > blob.len() {
                return Err(CodecError::BadBlob("blob ends inside a cdf".into()));
            }
            let mut cdf: Vec<u32> = blob[pos..end]
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]) as u32)
                .collect();
            pos = end;
            if let Some(last) = cdf.last_mut() {
                if *last == 0 {
                    *last = TOTAL; // 65536 wraps to 0 in the u16 wire form
                }
            }
            tables.push(CdfTable::new(offset, cdf)?);
        }
        if pos != blob.len() {
            return Err(CodecError::BadBlob(format!(
                "{} trailing bytes after table blob",
                blob.len() - pos
            )));
        }
        Ok(TableSet { tables, blob: blob.to_vec() })
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// The table a context index names.
    pub fn get(&self, context: u16, position: usize) -> Result<&CdfTable, CodecError> {
        self.tables.get(context as usize).ok_or(CodecError::BadContext {
            position,
            context,
            tables: self.tables.len(),
        })
    }

    /// The canonical bytes this set was parsed from.
    pub fn blob(&self) -> &[u8] {
        &self.blob
    }

    /// Stable identity: the first 8 bytes of SHA-256 of the blob, little-endian.
    pub fn table_id(&self) -> u64 {
        table_id_of(&self.blob)
    }
}

/// Table id of a raw blob without parsing it.
pub fn table_id_of(blob: &[u8]) -> u64 {
    let digest = Sha256::digest(blob);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

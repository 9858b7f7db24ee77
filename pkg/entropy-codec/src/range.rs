//! Carry-less byte-wise range coder (32-bit state, 16-bit frequencies).
//!
//! The encoder tracks a half-open interval [low, low+range) modulo 2^32 and
//! emits the top byte whenever it has settled; interval underflow is
//! resolved by clipping `range` to the next 16-bit boundary, so no carry
//! propagation is ever needed.  The decoder mirrors the renormalization
//! exactly, which makes consumed-byte accounting deterministic.
//!
//! Each interval split scales the cumulative slice by floor(range / 2^16);
//! the truncation residue (range mod 2^16) is handed to the table's most
//! probable slice instead of being discarded, so the slices tile the whole
//! interval and near-deterministic streams code at essentially their
//! entropy.
//!
//! Flushing always writes 4 bytes of `low`, so the payload for an empty
//! symbol sequence is exactly 4 bytes.

use crate::tables::{TableSet, TOTAL};
use crate::CodecError;

const PRECISION: u32 = 16;
const TOP: u32 = 1 << 24;
const BOT: u32 = 1 << 16;

pub struct RangeEncoder {
    low: u32,
    range: u32,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder { low: 0, range: u32::MAX, out: Vec::new() }
    }

    /// Narrows the interval to the cumulative slice [cum_low, cum_high).
    ///
    /// [max_low, max_high) is the table's most probable slice; it receives
    /// the truncation residue, and slices above it shift by that residue.
    pub fn encode_bin(&mut self, cum_low: u32, cum_high: u32, max_low: u32, max_high: u32) {
        debug_assert!(cum_low < cum_high && cum_high <= TOTAL);
        let r = self.range >> PRECISION;
        let residue = self.range - r * TOTAL;
        let base = r * cum_low + if cum_low >= max_high { residue } else { 0 };
        let mut low = self.low.wrapping_add(base);
        let mut rng = r * (cum_high - cum_low) + if cum_low == max_low { residue } else { 0 };
        loop {
            if (low ^ low.wrapping_add(rng)) < TOP {
                // top byte settled, fall through to emit it
            } else if rng < BOT {
                rng = low.wrapping_neg() & (BOT - 1);
            } else {
                break;
            }
            self.out.push((low >> 24) as u8);
            low <<= 8;
            rng <<= 8;
        }
        self.low = low;
        self.range = rng;
    }

    /// Flushes the final 4 state bytes and returns the payload.
    pub fn finish(mut self) -> Vec<u8> {
        let mut low = self.low;
        for _ in 0..4 {
            self.out.push((low >> 24) as u8);
            low <<= 8;
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    low: u32,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(payload: &'a [u8]) -> Result<Self, CodecError> {
        let mut dec = RangeDecoder { data: payload, pos: 0, low: 0, range: u32::MAX, code: 0 };
        for _ in 0..4 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8, CodecError> {
        if self.pos >= self.data.len() {
            return Err(CodecError::Truncated { at: self.pos, len: self.data.len() });
        }
        let b = self.data[self.pos];
        self.pos += 1;
        Ok(b)
    }

    /// Bytes read so far, including the 4-byte seed.
    pub fn consumed(&self) -> usize {
        self.pos
    }

    /// Cumulative-frequency position of the next symbol, in [0, TOTAL).
    ///
    /// Mirrors the encoder's slice layout: positions inside the stretched
    /// most-probable slice map to max_low, positions above it shed the
    /// residue first.  A corrupted stream can push the raw value out of
    /// range; it is clamped so decoding yields wrong symbols rather than an
    /// index fault.
    pub fn decode_target(&self, max_low: u32, max_high: u32) -> u32 {
        let r = self.range >> PRECISION;
        let residue = self.range - r * TOTAL;
        let pos = self.code.wrapping_sub(self.low);
        let dv = if pos < r * max_low {
            pos / r
        } else if pos < r * max_high + residue {
            max_low
        } else {
            (pos - residue) / r
        };
        dv.min(TOTAL - 1)
    }

    /// Commits the symbol whose slice contained decode_target().
    pub fn consume_bin(
        &mut self,
        cum_low: u32,
        cum_high: u32,
        max_low: u32,
        max_high: u32,
    ) -> Result<(), CodecError> {
        let r = self.range >> PRECISION;
        let residue = self.range - r * TOTAL;
        let base = r * cum_low + if cum_low >= max_high { residue } else { 0 };
        let mut low = self.low.wrapping_add(base);
        let mut rng = r * (cum_high - cum_low) + if cum_low == max_low { residue } else { 0 };
        let mut code = self.code;
        loop {
            if (low ^ low.wrapping_add(rng)) < TOP {
                // top byte settled, fall through to consume one byte
            } else if rng < BOT {
                rng = low.wrapping_neg() & (BOT - 1);
            } else {
                break;
            }
            code = (code << 8) | self.next_byte()? as u32;
            low <<= 8;
            rng <<= 8;
        }
        self.low = low;
        self.range = rng;
        self.code = code;
        Ok(())
    }
}

/// Encodes symbols, each under the table named by its context.
pub fn encode(symbols: &[i32], contexts: &[u16], tables: &TableSet) -> Result<Vec<u8>, CodecError> {
    if symbols.len() != contexts.len() {
        return Err(CodecError::BadInput(format!(
            "{} symbols but {} contexts",
            symbols.len(),
            contexts.len()
        )));
    }
    let mut enc = RangeEncoder::new();
    for (pos, (&value, &ctx)) in symbols.iter().zip(contexts).enumerate() {
        let table = tables.get(ctx, pos)?;
        let (lo, hi) = table.cum_range(value, pos)?;
        let (max_lo, max_hi) = table.max_slice();
        enc.encode_bin(lo, hi, max_lo, max_hi);
    }
    Ok(enc.finish())
}

/// Decodes contexts.len() symbols; errors on truncated payloads.
pub fn decode(payload: &[u8], contexts: &[u16], tables: &TableSet) -> Result<Vec<i32>, CodecError> {
    let mut dec = RangeDecoder::new(payload)?;
    let mut out = Vec::with_capacity(contexts.len());
    for (pos, &ctx) in contexts.iter().enumerate() {
        let table = tables.get(ctx, pos)?;
        let (max_lo, max_hi) = table.max_slice();
        let target = dec.decode_target(max_lo, max_hi);
        let value = table.value_of_target(target);
        let (lo, hi) = table.slice_of_bin(table.bin_of_value(value));
        dec.consume_bin(lo, hi, max_lo, max_hi)?;
        out.push(value);
    }
    Ok(out)
}

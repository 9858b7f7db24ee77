//! C ABI for embedding the coder in other runtimes.
//!
//! All functions return a status code; outputs land in caller-provided
//! buffers.  The table blob uses the same wire format as [`crate::tables`].
//! For encoding, a buffer of `2 * count + 16` bytes is always large enough:
//! each step emits at most 2 bytes before renormalization restores
//! `range >= 2^16`, plus the 4-byte flush.

use crate::range;
use crate::tables::{table_id_of, TableSet};
use crate::CodecError;
use std::slice;

pub const STATUS_OK: i32 = 0;
pub const STATUS_NULL_POINTER: i32 = -1;
pub const STATUS_BAD_BLOB: i32 = -2;
pub const STATUS_BAD_CONTEXT: i32 = -3;
pub const STATUS_OUT_OF_SUPPORT: i32 = -4;
pub const STATUS_BUFFER_TOO_SMALL: i32 = -5;
pub const STATUS_TRUNCATED: i32 = -6;

fn status_of(err: &CodecError) -> i32 {
    match err {
        CodecError::BadBlob(_) => STATUS_BAD_BLOB,
        CodecError::BadContext { .. } => STATUS_BAD_CONTEXT,
        CodecError::OutOfSupport { .. } => STATUS_OUT_OF_SUPPORT,
        CodecError::Truncated { .. } => STATUS_TRUNCATED,
        CodecError::BadInput(_) => STATUS_NULL_POINTER,
    }
}

/// Builds a slice from a C pointer, accepting null only when len == 0.
unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Result<&'a [T], i32> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(STATUS_NULL_POINTER);
    }
    Ok(slice::from_raw_parts(ptr, len))
}

/// Encodes `count` symbols; writes payload bytes to `out` and the byte
/// count to `out_len`.
///
/// # Safety
/// Pointers must reference readable/writable memory of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn entropy_codec_encode(
    symbols: *const i32,
    contexts: *const u16,
    count: usize,
    blob: *const u8,
    blob_len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> i32 {
    if out.is_null() || out_len.is_null() {
        return STATUS_NULL_POINTER;
    }
    let symbols = match slice_arg(symbols, count) {
        Ok(s) => s,
        Err(rc) => return rc,
    };
    let contexts = match slice_arg(contexts, count) {
        Ok(s) => s,
        Err(rc) => return rc,
    };
    let blob = match slice_arg(blob, blob_len) {
        Ok(s) => s,
        Err(rc) => return rc,
    };
    let tables = match TableSet::from_blob(blob) {
        Ok(t) => t,
        Err(e) => return status_of(&e),
    };
    let payload = match range::encode(symbols, contexts, &tables) {
        Ok(p) => p,
        Err(e) => return status_of(&e),
    };
    if payload.len() > out_cap {
        return STATUS_BUFFER_TOO_SMALL;
    }
    slice::from_raw_parts_mut(out, payload.len()).copy_from_slice(&payload);
    *out_len = payload.len();
    STATUS_OK
}

/// Decodes `count` symbols (one per context) into `out_symbols`.
///
/// # Safety
/// Pointers must reference readable/writable memory of the stated sizes;
/// `out_symbols` must hold `count` values.
#[no_mangle]
pub unsafe extern "C" fn entropy_codec_decode(
    payload: *const u8,
    payload_len: usize,
    contexts: *const u16,
    count: usize,
    blob: *const u8,
    blob_len: usize,
    out_symbols: *mut i32,
) -> i32 {
    if count > 0 && out_symbols.is_null() {
        return STATUS_NULL_POINTER;
    }
    let payload = match slice_arg(payload, payload_len) {
        Ok(s) => s,
        Err(rc) => return rc,
    };
    let contexts = match slice_arg(contexts, count) {
        Ok(s) => s,
        Err(rc) => return rc,
    };
    let blob = match slice_arg(blob, blob_len) {
        Ok(s) => s,
        Err(rc) => return rc,
    };
    let tables = match TableSet::from_blob(blob) {
        Ok(t) => t,
        Err(e) => return status_of(&e),
    };
    let values = match range::decode(payload, contexts, &tables) {
        Ok(v) => v,
        Err(e) => return status_of(&e),
    };
    if count > 0 {
        slice::from_raw_parts_mut(out_symbols, count).copy_from_slice(&values);
    }
    STATUS_OK
}

/// Writes the 64-bit table-set fingerprint of a blob to `out_id`.
///
/// # Safety
/// `blob` must reference `blob_len` readable bytes; `out_id` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn entropy_codec_table_id(
    blob: *const u8,
    blob_len: usize,
    out_id: *mut u64,
) -> i32 {
    if out_id.is_null() {
        return STATUS_NULL_POINTER;
    }
    let blob = match slice_arg(blob, blob_len) {
        Ok(s) => s,
        Err(rc) => return rc,
    };
    if let Err(e) = TableSet::from_blob(blob) {
        return status_of(&e);
    }
    *out_id = table_id_of(blob);
    STATUS_OK
}

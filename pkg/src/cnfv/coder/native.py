"""Optional binding to a native entropy-coder shared library.

The native coder is a separate build artifact that mirrors the reference
range coder byte for byte over the same table-blob wire format.  Nothing
in this package requires it; callers opt in by pointing
:func:`load_native_coder` (or the ``ENTROPY_CODEC_LIB`` environment
variable) at the compiled library.

The C surface has three entry points::

    entropy_codec_encode(symbols*, contexts*, count, blob*, blob_len,
                         out*, out_cap, out_len*) -> status
    entropy_codec_decode(payload*, payload_len, contexts*, count,
                         blob*, blob_len, out_symbols*) -> status
    entropy_codec_table_id(blob*, blob_len, out_id*) -> status

Status 0 is success; negative codes map onto the same exceptions the
reference coder raises for the equivalent failure.
"""

import ctypes
import os
from pathlib import Path

import numpy as np

from cnfv.errors import (
    ConfigError,
    EncodeSymbolError,
    InvalidInput,
    TableMismatch,
    TruncatedStream,
)

ENV_VAR = "ENTROPY_CODEC_LIB"

_STATUS_ERRORS = {
    -1: (InvalidInput, "null pointer"),
    -2: (InvalidInput, "bad table blob"),
    -3: (TableMismatch, "context outside table set"),
    -4: (EncodeSymbolError, "symbol outside table support"),
    -5: (InvalidInput, "output buffer too small"),
    -6: (TruncatedStream, "payload exhausted before all symbols decoded"),
}

_c_u8_p = ctypes.POINTER(ctypes.c_uint8)
_c_u16_p = ctypes.POINTER(ctypes.c_uint16)
_c_i32_p = ctypes.POINTER(ctypes.c_int32)


def _raise_for(status: int, what: str) -> None:
    if status == 0:
        return
    exc, msg = _STATUS_ERRORS.get(status, (InvalidInput, f"unknown status {status}"))
    raise exc(f"native {what} failed: {msg}")


def _arr(values, dtype) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(values, dtype=dtype))


class NativeCoder:
    """ctypes wrapper with the same call shape as the reference coder."""

    def __init__(self, lib_path: str | os.PathLike):
        path = Path(lib_path)
        if not path.is_file():
            raise ConfigError(f"native coder library not found: {path}")
        self._lib = ctypes.CDLL(str(path))
        enc = self._lib.entropy_codec_encode
        enc.argtypes = [
            _c_i32_p, _c_u16_p, ctypes.c_size_t,
            _c_u8_p, ctypes.c_size_t,
            _c_u8_p, ctypes.c_size_t, ctypes.POINTER(ctypes.c_size_t),
        ]
        enc.restype = ctypes.c_int32
        dec = self._lib.entropy_codec_decode
        dec.argtypes = [
            _c_u8_p, ctypes.c_size_t,
            _c_u16_p, ctypes.c_size_t,
            _c_u8_p, ctypes.c_size_t,
            _c_i32_p,
        ]
        dec.restype = ctypes.c_int32
        tid = self._lib.entropy_codec_table_id
        tid.argtypes = [_c_u8_p, ctypes.c_size_t, ctypes.POINTER(ctypes.c_uint64)]
        tid.restype = ctypes.c_int32

    def encode(self, symbols, contexts, blob: bytes) -> bytes:
        sym = _arr(symbols, np.int32)
        ctx = _arr(contexts, np.uint16)
        if len(sym) != len(ctx):
            raise InvalidInput(f"{len(sym)} symbols but {len(ctx)} contexts")
        blob_arr = np.frombuffer(blob, dtype=np.uint8)
        # Each coding step emits at most 2 bytes before renormalization
        # restores range >= 2^16, plus the 4-byte flush.
        out = np.empty(2 * len(sym) + 16, dtype=np.uint8)
        out_len = ctypes.c_size_t(0)
        status = self._lib.entropy_codec_encode(
            sym.ctypes.data_as(_c_i32_p),
            ctx.ctypes.data_as(_c_u16_p),
            len(sym),
            blob_arr.ctypes.data_as(_c_u8_p),
            len(blob_arr),
            out.ctypes.data_as(_c_u8_p),
            len(out),
            ctypes.byref(out_len),
        )
        _raise_for(status, "encode")
        return out[: out_len.value].tobytes()

    def decode(self, payload: bytes, contexts, blob: bytes) -> list[int]:
        ctx = _arr(contexts, np.uint16)
        pay = np.frombuffer(payload, dtype=np.uint8)
        blob_arr = np.frombuffer(blob, dtype=np.uint8)
        out = np.empty(len(ctx), dtype=np.int32)
        status = self._lib.entropy_codec_decode(
            pay.ctypes.data_as(_c_u8_p),
            len(pay),
            ctx.ctypes.data_as(_c_u16_p),
            len(ctx),
            blob_arr.ctypes.data_as(_c_u8_p),
            len(blob_arr),
            out.ctypes.data_as(_c_i32_p),
        )
        _raise_for(status, "decode")
        return out.tolist()

    def table_id(self, blob: bytes) -> int:
        blob_arr = np.frombuffer(blob, dtype=np.uint8)
        out_id = ctypes.c_uint64(0)
        status = self._lib.entropy_codec_table_id(
            blob_arr.ctypes.data_as(_c_u8_p), len(blob_arr), ctypes.byref(out_id)
        )
        _raise_for(status, "table_id")
        return out_id.value


def load_native_coder(lib_path: str | os.PathLike | None = None) -> NativeCoder:
    """Load the native coder from an explicit path or ``ENTROPY_CODEC_LIB``."""
    path = lib_path or os.environ.get(ENV_VAR)
    if not path:
        raise ConfigError(
            f"no native coder configured: pass a library path or set {ENV_VAR}"
        )
    return NativeCoder(path)

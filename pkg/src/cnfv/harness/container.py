"""Bitstream container: header + self-describing frame records.

Header (little-endian, 57 bytes): magic "CNFV", version u16, width u32,
height u32, padded width u32, padded height u32, gop_size u16,
lambda_index u16, intra_kind u8, manifest SHA-256 (32 bytes).

Records follow until EOF.  Each starts with a type byte: intra records
carry one length-prefixed payload, P records carry two chunks (motion then
inter), each as table_id u64, symbol_count u32, payload_len u32, payload.
EOF is only legal at a record boundary.
"""

import struct
from dataclasses import dataclass
from typing import BinaryIO

from cnfv.coder.range_coder import BitChunk
from cnfv.errors import DecodeIncompatible, InvalidInput, TruncatedStream

MAGIC = b"CNFV"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIIHHB32s")
_CHUNK_HEAD = struct.Struct("<QII")
FRAME_INTRA = 0
FRAME_P = 1
INTRA_KIND_LOSSLESS = 0
INTRA_KIND_EXTERNAL = 1


@dataclass
class ContainerHeader:
    width: int
    height: int
    padded_width: int
    padded_height: int
    gop_size: int
    lambda_index: int
    intra_kind: int
    manifest_sha: bytes

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC, VERSION, self.width, self.height, self.padded_width,
            self.padded_height, self.gop_size, self.lambda_index,
            self.intra_kind, self.manifest_sha,
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "ContainerHeader":
        magic, version, w, h, pw, ph, gop, lam, intra_kind, sha = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise InvalidInput(f"bad container magic {magic!r}")
        if version != VERSION:
            raise DecodeIncompatible(f"container version {version}, expected {VERSION}")
        return cls(w, h, pw, ph, gop, lam, intra_kind, sha)

    @property
    def size(self) -> int:
        return _HEADER.size


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedStream(f"container ended inside {what} ({len(data)}/{n} bytes)")
    return data


def read_header(f: BinaryIO) -> ContainerHeader:
    return ContainerHeader.unpack(_read_exact(f, _HEADER.size, "header"))


def write_chunk(f: BinaryIO, chunk: BitChunk) -> int:
    head = _CHUNK_HEAD.pack(chunk.table_id, chunk.symbol_count, len(chunk.payload))
    f.write(head)
    f.write(chunk.payload)
    return len(head) + len(chunk.payload)


def read_chunk(f: BinaryIO) -> BitChunk:
    table_id, count, length = _CHUNK_HEAD.unpack(_read_exact(f, _CHUNK_HEAD.size, "chunk header"))
    payload = _read_exact(f, length, "chunk payload")
    return BitChunk(table_id, count, payload)


def write_intra_record(f: BinaryIO, payload: bytes) -> int:
    f.write(struct.pack("<BI", FRAME_INTRA, len(payload)))
    f.write(payload)
    return 5 + len(payload)


def write_p_record(f: BinaryIO, motion: BitChunk, inter: BitChunk) -> int:
    f.write(struct.pack("<B", FRAME_P))
    return 1 + write_chunk(f, motion) + write_chunk(f, inter)


def read_record(f: BinaryIO):
    """Next frame record, or None at a clean end of stream.

    Returns ("I", payload) or ("P", motion_chunk, inter_chunk).
    """
    first = f.read(1)
    if first == b"":
        return None
    frame_type = first[0]
    if frame_type == FRAME_INTRA:
        (length,) = struct.unpack("<I", _read_exact(f, 4, "intra record header"))
        return ("I", _read_exact(f, length, "intra payload"))
    if frame_type == FRAME_P:
        return ("P", read_chunk(f), read_chunk(f))
    raise InvalidInput(f"unknown frame record type {frame_type}")

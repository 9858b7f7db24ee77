"""Integer CDF tables and their serialized blob form.

A table maps integer symbol values (offset .. offset+len-1) to cumulative
16-bit frequencies; every bin holds at least one unit of mass so any
in-support symbol stays codable.  Tables serialize into one little-endian
blob whose SHA-256 prefix identifies the whole set in the bitstream.

Blob layout: precision u8, num_tables u16, then per table
offset i32, len u16, cdf u16[len+1] with the final 65536 stored as 0.
"""

import hashlib
import struct
from bisect import bisect_right

import numpy as np
from scipy.special import ndtr

from cnfv.canf_core.scales import scale_grid, support_max
from cnfv.errors import EncodeSymbolError, InvalidInput, TableMismatch, TruncatedStream

PRECISION = 16
TOTAL = 1 << PRECISION


def quantize_pmf(pmf: np.ndarray) -> np.ndarray:
    """Deterministic float pmf -> integer masses summing to 2^16, all >= 1.

    Largest-remainder allocation keeps symmetric inputs symmetric to within
    one unit; the minimum-mass fixup is repaid one unit per donor starting
    from the richest bins, so no single bin absorbs the whole debt.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    if pmf.ndim != 1 or len(pmf) < 1 or len(pmf) > 0xFFFF:
        raise InvalidInput(f"pmf must be 1-D with 1..65535 bins, got shape {pmf.shape}")
    if not np.all(np.isfinite(pmf)) or np.any(pmf < 0) or pmf.sum() <= 0:
        raise InvalidInput("pmf must be finite, non-negative and have positive mass")
    exact = pmf / pmf.sum() * TOTAL
    masses = np.floor(exact).astype(np.int64)
    remainder = exact - masses
    short = TOTAL - int(masses.sum())
    order = np.lexsort((np.arange(len(pmf)), -remainder))
    masses[order[:short]] += 1
    zeros = masses == 0
    masses[zeros] += 1
    debt = int(zeros.sum())
    while debt > 0:
        donors = np.lexsort((np.arange(len(masses)), -masses))
        repaid = 0
        for i in donors:
            if debt == 0:
                break
            if masses[i] > 1:
                masses[i] -= 1
                debt -= 1
                repaid += 1
        if debt > 0 and repaid == 0:
            raise InvalidInput("pmf has too many bins for 16-bit precision")
    return masses


class CdfTable:
    """One symbol distribution: integer support plus cumulative masses."""

    def __init__(self, offset: int, cdf: np.ndarray):
        cdf = np.asarray(cdf, dtype=np.int64)
        if cdf.ndim != 1 or len(cdf) < 2:
            raise InvalidInput("cdf needs at least two entries")
        if cdf[0] != 0 or cdf[-1] != TOTAL or np.any(np.diff(cdf) <= 0):
            raise InvalidInput("cdf must rise strictly from 0 to 65536")
        self.offset = int(offset)
        self.cdf = cdf
        self._cdf_list = cdf.tolist()
        # Most probable slice (first one on ties); the range coder hands it
        # the truncation residue, so encoder and decoder must agree on it.
        widest = int(np.argmax(np.diff(cdf)))
        self.max_slice = (self._cdf_list[widest], self._cdf_list[widest + 1])

    @classmethod
    def from_pmf(cls, offset: int, pmf: np.ndarray) -> "CdfTable":
        masses = quantize_pmf(pmf)
        cdf = np.concatenate([[0], np.cumsum(masses)])
        return cls(offset, cdf)

    def __len__(self) -> int:
        return len(self.cdf) - 1

    @property
    def support(self) -> tuple[int, int]:
        return self.offset, self.offset + len(self) - 1

    def cum_range(self, value: int, position: int | None = None) -> tuple[int, int]:
        bin_idx = value - self.offset
        if not 0 <= bin_idx < len(self):
            where = "" if position is None else f" at position {position}"
            raise EncodeSymbolError(
                f"symbol {value}{where} outside table support "
                f"[{self.support[0]}, {self.support[1]}]"
            )
        return self._cdf_list[bin_idx], self._cdf_list[bin_idx + 1]

    def decode_from(self, decoder) -> int:
        target = decoder.decode_target(*self.max_slice)
        bin_idx = bisect_right(self._cdf_list, target) - 1
        decoder.consume_bin(
            self._cdf_list[bin_idx], self._cdf_list[bin_idx + 1], *self.max_slice
        )
        return self.offset + bin_idx


def gaussian_table(sigma: float) -> CdfTable:
    """Unit-bin table for a zero-mean Gaussian, tails folded into the edges.

    Probabilities are built from the negative half and mirrored, so the
    float pmf is exactly symmetric before quantization.
    """
    if not sigma > 0:
        raise InvalidInput(f"sigma must be positive, got {sigma}")
    smax = support_max(sigma)
    k = np.arange(-smax, smax + 1, dtype=np.float64)
    neg = -np.abs(k)
    pmf = ndtr((neg + 0.5) / sigma) - ndtr((neg - 0.5) / sigma)
    tail = ndtr((-smax + 0.5) / sigma)
    pmf[0] = tail
    pmf[-1] = tail
    return CdfTable.from_pmf(-smax, pmf)


def gaussian_grid_tables() -> list[CdfTable]:
    return [gaussian_table(float(s)) for s in scale_grid()]


class TableSet:
    def __init__(self, tables: list[CdfTable]):
        if not tables or len(tables) > 0xFFFF:
            raise InvalidInput(f"table set must hold 1..65535 tables, got {len(tables)}")
        self.tables = list(tables)
        self._blob: bytes | None = None

    def __len__(self) -> int:
        return len(self.tables)

    def __getitem__(self, idx: int) -> CdfTable:
        try:
            return self.tables[idx]
        except IndexError:
            raise TableMismatch(f"context {idx} outside table set of {len(self.tables)}")

    def blob(self) -> bytes:
        if self._blob is None:
            parts = [struct.pack("<BH", PRECISION, len(self.tables))]
            for t in self.tables:
                parts.append(struct.pack("<iH", t.offset, len(t)))
                parts.append(
                    np.asarray(t.cdf % TOTAL, dtype="<u2").tobytes()
                )
            self._blob = b"".join(parts)
        return self._blob

    def table_id(self) -> int:
        return table_id_of(self.blob())

    @classmethod
    def from_blob(cls, blob: bytes) -> "TableSet":
        view = memoryview(blob)
        if len(view) < 3:
            raise TruncatedStream("table blob shorter than its header")
        precision, count = struct.unpack_from("<BH", view, 0)
        if precision != PRECISION:
            raise InvalidInput(f"unsupported table precision {precision}")
        pos = 3
        tables = []
        for _ in range(count):
            if pos + 6 > len(view):
                raise TruncatedStream("table blob ends inside a table header")
            offset, n = struct.unpack_from("<iH", view, pos)
            pos += 6
            end = pos + 2 * (n + 1)
            if end > len(view):
                raise TruncatedStream("table blob ends inside a cdf")
            cdf = np.frombuffer(view[pos:end], dtype="<u2").astype(np.int64)
            pos = end
            if n >= 1 and cdf[-1] == 0:
                cdf[-1] = TOTAL
            tables.append(CdfTable(offset, cdf))
        if pos != len(view):
            raise InvalidInput(f"{len(view) - pos} trailing bytes after table blob")
        inst = cls(tables)
        inst._blob = bytes(blob)
        return inst


def table_id_of(blob: bytes) -> int:
    digest = hashlib.sha256(blob).digest()
    return int.from_bytes(digest[:8], "little")

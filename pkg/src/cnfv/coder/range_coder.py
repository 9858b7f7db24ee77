"""Carry-less byte-wise range coder (32-bit state, 16-bit frequencies).

The encoder tracks a half-open interval [low, low+range) modulo 2^32 and
emits the top byte whenever it has settled; interval underflow is resolved
by clipping `range` to the next 16-bit boundary, so no carry propagation is
ever needed.  The decoder mirrors the encoder's renormalization exactly,
which makes consumed-byte accounting deterministic: after the 4-byte seed
it reads precisely the bytes the encoder emitted.

Each interval split scales the cumulative slice by floor(range / 2^16); the
truncation residue (range mod 2^16) is handed to the table's most probable
slice instead of being discarded, so the slices tile the whole interval and
near-deterministic streams code at essentially their entropy.

Flushing always writes 4 bytes of `low`, so the payload for an empty symbol
sequence is exactly 4 bytes.
"""

from dataclasses import dataclass
from typing import Sequence

from cnfv.errors import EncodeSymbolError, InvalidInput, TruncatedStream

PRECISION = 16
TOTAL = 1 << PRECISION
TOP = 1 << 24
BOT = 1 << 16
MASK = 0xFFFFFFFF


@dataclass(frozen=True)
class BitChunk:
    """One entropy-coded unit as stored in the container."""

    table_id: int
    symbol_count: int
    payload: bytes

    @property
    def bits(self) -> int:
        return 8 * len(self.payload)


class RangeEncoder:
    def __init__(self) -> None:
        self._low = 0
        self._range = MASK
        self._out = bytearray()

    def encode_bin(
        self, cum_low: int, cum_high: int, max_low: int, max_high: int
    ) -> None:
        """Narrow the interval to the cumulative slice [cum_low, cum_high).

        [max_low, max_high) is the table's most probable slice; it receives
        the truncation residue, and slices above it shift by that residue.
        """
        if not 0 <= cum_low < cum_high <= TOTAL:
            raise InvalidInput(f"bad cumulative slice [{cum_low}, {cum_high})")
        r = self._range >> PRECISION
        residue = self._range - r * TOTAL
        base = r * cum_low + (residue if cum_low >= max_high else 0)
        low = (self._low + base) & MASK
        rng = r * (cum_high - cum_low) + (residue if cum_low == max_low else 0)
        while True:
            if (low ^ ((low + rng) & MASK)) < TOP:
                pass
            elif rng < BOT:
                rng = (-low) & (BOT - 1)
            else:
                break
            self._out.append((low >> 24) & 0xFF)
            low = (low << 8) & MASK
            rng = (rng << 8) & MASK
        self._low, self._range = low, rng

    def finish(self) -> bytes:
        low = self._low
        for _ in range(4):
            self._out.append((low >> 24) & 0xFF)
            low = (low << 8) & MASK
        return bytes(self._out)


class RangeDecoder:
    def __init__(self, payload: bytes) -> None:
        self._data = payload
        self._pos = 0
        self._low = 0
        self._range = MASK
        code = 0
        for _ in range(4):
            code = ((code << 8) | self._next_byte()) & MASK
        self._code = code

    def _next_byte(self) -> int:
        if self._pos >= len(self._data):
            raise TruncatedStream(
                f"payload exhausted at byte {self._pos} of {len(self._data)}"
            )
        b = self._data[self._pos]
        self._pos += 1
        return b

    @property
    def consumed(self) -> int:
        return self._pos

    def decode_target(self, max_low: int, max_high: int) -> int:
        """Cumulative-frequency position of the next symbol, in [0, TOTAL).

        Mirrors the encoder's slice layout: positions inside the stretched
        most-probable slice map to max_low, positions above it shed the
        residue first.  A corrupted stream can push the raw value out of
        range; it is clamped so decoding yields wrong symbols rather than an
        index fault.
        """
        r = self._range >> PRECISION
        residue = self._range - r * TOTAL
        pos = (self._code - self._low) & MASK
        if pos < r * max_low:
            dv = pos // r
        elif pos < r * max_high + residue:
            dv = max_low
        else:
            dv = (pos - residue) // r
        return min(dv, TOTAL - 1)

    def consume_bin(
        self, cum_low: int, cum_high: int, max_low: int, max_high: int
    ) -> None:
        """Commit the symbol whose slice contained decode_target()."""
        r = self._range >> PRECISION
        residue = self._range - r * TOTAL
        base = r * cum_low + (residue if cum_low >= max_high else 0)
        low = (self._low + base) & MASK
        rng = r * (cum_high - cum_low) + (residue if cum_low == max_low else 0)
        code = self._code
        while True:
            if (low ^ ((low + rng) & MASK)) < TOP:
                pass
            elif rng < BOT:
                rng = (-low) & (BOT - 1)
            else:
                break
            code = ((code << 8) | self._next_byte()) & MASK
            low = (low << 8) & MASK
            rng = (rng << 8) & MASK
        self._low, self._range, self._code = low, rng, code


def range_encode(symbols: Sequence[int], contexts: Sequence[int], table_set) -> bytes:
    """Encode symbols, each under the table named by its context."""
    if len(symbols) != len(contexts):
        raise InvalidInput(
            f"{len(symbols)} symbols but {len(contexts)} contexts"
        )
    enc = RangeEncoder()
    for pos, (value, ctx) in enumerate(zip(symbols, contexts)):
        table = table_set[ctx]
        lo, hi = table.cum_range(value, pos)
        enc.encode_bin(lo, hi, *table.max_slice)
    return enc.finish()


def range_decode(payload: bytes, contexts: Sequence[int], table_set) -> list[int]:
    """Decode len(contexts) symbols; raises TruncatedStream on short payloads."""
    dec = RangeDecoder(payload)
    out = []
    for ctx in contexts:
        out.append(table_set[ctx].decode_from(dec))
    return out


__all__ = [
    "PRECISION",
    "TOTAL",
    "BitChunk",
    "RangeEncoder",
    "RangeDecoder",
    "range_encode",
    "range_decode",
    "EncodeSymbolError",
]

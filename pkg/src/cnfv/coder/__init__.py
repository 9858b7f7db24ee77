"""Reference entropy coding: range coder, CDF tables, latent serialization."""

from cnfv.coder.range_coder import BitChunk, RangeDecoder, RangeEncoder, range_decode, range_encode
from cnfv.coder.tables import CdfTable, TableSet, gaussian_table, quantize_pmf

__all__ = [
    "BitChunk",
    "RangeDecoder",
    "RangeEncoder",
    "range_decode",
    "range_encode",
    "CdfTable",
    "TableSet",
    "gaussian_table",
    "quantize_pmf",
]

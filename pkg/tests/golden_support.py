"""Deterministic golden-vector suite for cross-implementation coder checks.

Every case is (symbols, contexts, table set, reference payload), generated
from a fixed seed so the same suite can be re-materialized anywhere: the
pytest side compares a live native coder against the reference in memory,
and ``tools/make_golden_vectors.py`` writes the same cases to disk for the
native crate's own test harness.

Case layout: 0 is empty, 1 a single symbol, 2 a fixed two-bin pattern,
3 a million-symbol skewed stream (also used for the coded-length bound),
4 a hundred-thousand-symbol uniform-256 stream, 5-6 the extreme ends of
the sigma grid, 7 an eight-table mixed set, and 8+ randomized mixes of
table families, set sizes, offsets and lengths.
"""

import math
from typing import Iterator, NamedTuple

import numpy as np

from cnfv.canf_core.scales import scale_grid
from cnfv.coder.range_coder import range_encode
from cnfv.coder.tables import TOTAL, CdfTable, TableSet, gaussian_table, quantize_pmf

SUITE_SEED = 20260814
N_CASES = 200

MAX_RANDOM_LEN = 30_000
FAMILIES = ("dirichlet", "zipf", "near_deterministic", "uniform", "gaussian")

# The skewed stream for the coded-length bound: heavily biased three-bin pmf.
SKEWED_PMF = (0.90, 0.08, 0.02)
SKEWED_LEN = 1_000_000


class GoldenCase(NamedTuple):
    index: int
    symbols: list[int]
    contexts: list[int]
    table_set: TableSet


def _table_from_pmf(pmf: np.ndarray, offset: int) -> CdfTable:
    return CdfTable.from_pmf(offset, pmf)


def random_table(rng: np.random.Generator) -> CdfTable:
    family = FAMILIES[rng.integers(len(FAMILIES))]
    if family == "gaussian":
        sigma = float(rng.choice(scale_grid()))
        return gaussian_table(sigma)
    n = int(rng.integers(2, 301))
    offset = int(rng.integers(-2000, 2001))
    if family == "dirichlet":
        alpha = float(rng.choice([0.05, 0.3, 1.0, 5.0]))
        pmf = rng.dirichlet(np.full(n, alpha))
    elif family == "zipf":
        s = float(rng.uniform(0.8, 2.2))
        pmf = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** s
        pmf = rng.permutation(pmf)
    elif family == "near_deterministic":
        eps = float(rng.choice([1e-3, 1e-5, 1e-7]))
        pmf = np.full(n, eps / (n - 1))
        pmf[rng.integers(n)] = 1.0 - eps
    else:
        pmf = np.full(n, 1.0 / n)
    return _table_from_pmf(pmf, offset)


def _sample_symbols(
    rng: np.random.Generator, table_set: TableSet, contexts: np.ndarray
) -> np.ndarray:
    """Mostly pmf-weighted draws with a sprinkle of uniform-over-support."""
    symbols = np.zeros(len(contexts), dtype=np.int64)
    for ctx in np.unique(contexts):
        table = table_set[int(ctx)]
        where = np.flatnonzero(contexts == ctx)
        pmf = np.diff(table.cdf) / TOTAL
        vals = table.offset + rng.choice(len(table), size=len(where), p=pmf)
        uniform = rng.random(len(where)) < 0.1
        vals[uniform] = rng.integers(
            table.support[0], table.support[1] + 1, size=int(uniform.sum())
        )
        symbols[where] = vals
    return symbols


def _random_case(index: int, rng: np.random.Generator) -> GoldenCase:
    n_tables = int(rng.integers(1, 9))
    table_set = TableSet([random_table(rng) for _ in range(n_tables)])
    lo, hi = math.log(1), math.log(MAX_RANDOM_LEN)
    length = int(round(math.exp(rng.uniform(lo, hi))))
    contexts = rng.integers(0, n_tables, size=length)
    symbols = _sample_symbols(rng, table_set, contexts)
    return GoldenCase(index, symbols.tolist(), contexts.tolist(), table_set)


def skewed_table() -> CdfTable:
    return _table_from_pmf(np.array(SKEWED_PMF), 0)


def build_case(index: int) -> GoldenCase:
    """Case by index, each deterministic in isolation."""
    rng = np.random.default_rng(SUITE_SEED + index)
    if index == 0:
        table_set = TableSet([_table_from_pmf(np.array([0.5, 0.5]), 0)])
        return GoldenCase(index, [], [], table_set)
    if index == 1:
        table_set = TableSet([_table_from_pmf(np.array([0.7, 0.3]), -1)])
        return GoldenCase(index, [0], [0], table_set)
    if index == 2:
        table_set = TableSet([_table_from_pmf(np.array([0.99, 0.01]), 5)])
        return GoldenCase(index, [5, 6, 5, 5], [0, 0, 0, 0], table_set)
    if index == 3:
        table_set = TableSet([skewed_table()])
        pmf = np.diff(table_set[0].cdf) / TOTAL
        symbols = rng.choice(3, size=SKEWED_LEN, p=pmf)
        return GoldenCase(index, symbols.tolist(), [0] * SKEWED_LEN, table_set)
    if index == 4:
        table_set = TableSet([_table_from_pmf(np.full(256, 1 / 256), -128)])
        symbols = rng.integers(-128, 128, size=100_000)
        return GoldenCase(index, symbols.tolist(), [0] * 100_000, table_set)
    if index == 5:
        table_set = TableSet([gaussian_table(float(scale_grid()[0]))])
        contexts = np.zeros(5000, dtype=np.int64)
        symbols = _sample_symbols(rng, table_set, contexts)
        return GoldenCase(index, symbols.tolist(), contexts.tolist(), table_set)
    if index == 6:
        table_set = TableSet([gaussian_table(float(scale_grid()[-1]))])
        contexts = np.zeros(2000, dtype=np.int64)
        symbols = _sample_symbols(rng, table_set, contexts)
        return GoldenCase(index, symbols.tolist(), contexts.tolist(), table_set)
    if index == 7:
        table_set = TableSet([random_table(rng) for _ in range(8)])
        contexts = rng.integers(0, 8, size=10_000)
        symbols = _sample_symbols(rng, table_set, contexts)
        return GoldenCase(index, symbols.tolist(), contexts.tolist(), table_set)
    return _random_case(index, rng)


def iter_cases() -> Iterator[GoldenCase]:
    for index in range(N_CASES):
        yield build_case(index)


def reference_payload(case: GoldenCase) -> bytes:
    return range_encode(case.symbols, case.contexts, case.table_set)


def floored_entropy_bits(case: GoldenCase) -> float:
    """Sum of -log2(mass/2^16) over the case's symbols: the table-implied
    information content the coder should approach."""
    if not case.symbols:
        return 0.0
    symbols = np.asarray(case.symbols)
    contexts = np.asarray(case.contexts)
    bits = 0.0
    for ctx in np.unique(contexts):
        table = case.table_set[int(ctx)]
        masses = np.diff(table.cdf)
        values = symbols[contexts == ctx] - table.offset
        bits += float(np.sum(-np.log2(masses[values] / TOTAL)))
    return bits

"""Builds the entropy-coding table set a codec advertises in its streams.

Layout: the 64 Gaussian grid tables first, then one factorized table per
hyper channel of each prior, in the order the priors are given.  Context
indices therefore split into a shared Gaussian region and per-prior bands.
"""

from dataclasses import dataclass

from cnfv.canf_core.prior import FactorizedPrior
from cnfv.canf_core.scales import SCALE_LEVELS
from cnfv.coder.tables import CdfTable, TableSet, gaussian_grid_tables


@dataclass(frozen=True)
class ContextLayout:
    """First context index of each prior's factorized band."""

    factorized_start: tuple[int, ...]

    def band(self, prior_index: int) -> int:
        return self.factorized_start[prior_index]


def build_table_set(*priors: FactorizedPrior) -> tuple[TableSet, ContextLayout]:
    tables = gaussian_grid_tables()
    starts = []
    for prior in priors:
        starts.append(len(tables))
        lo, hi = prior.support()
        for c in range(prior.channels):
            clo, chi = int(lo[c]), int(hi[c])
            pmf = prior.bin_pmf(c, clo, chi).numpy()
            tables.append(CdfTable.from_pmf(clo, pmf))
    return TableSet(tables), ContextLayout(tuple(starts))


GAUSSIAN_CONTEXTS = SCALE_LEVELS

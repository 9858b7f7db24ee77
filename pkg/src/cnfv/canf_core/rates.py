"""Differentiable rate terms in bits.

Both terms integrate a density over the unit bin around each value and
floor the resulting probability at 2^-16 so rates stay finite; the floor
matches the smallest mass an entropy-coding table can represent.
"""

import math

import torch

from cnfv.canf_core.prior import FactorizedPrior, P_FLOOR, floored_likelihood
from cnfv.errors import InvalidInput

SIGMA_MIN = math.exp(-7.0)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _std_normal_cdf(x: torch.Tensor) -> torch.Tensor:
    return 0.5 * torch.erfc(-x * _INV_SQRT2)


def gaussian_bin_likelihood(
    values: torch.Tensor, mu: torch.Tensor, sigma: torch.Tensor
) -> torch.Tensor:
    """Mass of N(mu, sigma^2) convolved with a unit bin at `values`.

    Evaluated on the negative side of the symmetric density so both CDF
    arguments sit in the well-conditioned left tail.
    """
    if not torch.isfinite(values).all():
        raise InvalidInput("non-finite latent values")
    centered = -(values - mu).abs()
    upper = _std_normal_cdf((centered + 0.5) / sigma)
    lower = _std_normal_cdf((centered - 0.5) / sigma)
    return upper - lower


def gaussian_rate_bits(
    values: torch.Tensor,
    mu: torch.Tensor,
    sigma: torch.Tensor,
    reduce: bool = True,
) -> torch.Tensor:
    """Total (or per-element) -log2 likelihood under the conditional Gaussian."""
    p = floored_likelihood(gaussian_bin_likelihood(values, mu, sigma))
    bits = -torch.log2(p)
    return bits.sum() if reduce else bits


def factorized_rate_bits(
    values: torch.Tensor, prior: FactorizedPrior, reduce: bool = True
) -> torch.Tensor:
    """Total (or per-element) -log2 likelihood under the factorized prior."""
    p = floored_likelihood(prior.likelihood(values))
    bits = -torch.log2(p)
    return bits.sum() if reduce else bits

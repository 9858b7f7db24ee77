"""Learned factorized prior over hyper latents.

Per channel, a stack of four monotone scalar layers (softplus-positive
matrix, bias, bounded tanh factor) parameterizes a cumulative distribution
whose logit is strictly increasing; bin probabilities come from CDF
differences at +-0.5 around a value.  Quantile parameters, trained by an
auxiliary loss, pin down the integer support each channel needs when the
prior is turned into entropy-coding tables.
"""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from cnfv.canf_core.quantizer import lower_bound
from cnfv.errors import InvalidInput

P_FLOOR = 2.0 ** -16
SUPPORT_MARGIN = 2


class _MonotoneLayer(nn.Module):
    def __init__(self, channels: int, in_dim: int, out_dim: int, scale: float, factor: bool):
        super().__init__()
        init = math.log(math.expm1(1.0 / scale / out_dim))
        self.weight = nn.Parameter(torch.full((channels, out_dim, in_dim), init))
        self.bias = nn.Parameter(torch.empty(channels, out_dim, 1).uniform_(-0.5, 0.5))
        self.factor = nn.Parameter(torch.zeros(channels, out_dim, 1)) if factor else None

    def forward(self, x: torch.Tensor, detach_params: bool = False) -> torch.Tensor:
        weight, bias, factor = self.weight, self.bias, self.factor
        if detach_params:
            weight = weight.detach()
            bias = bias.detach()
            factor = None if factor is None else factor.detach()
        x = torch.matmul(F.softplus(weight), x) + bias
        if factor is not None:
            x = x + torch.tanh(factor) * torch.tanh(x)
        return x


class FactorizedPrior(nn.Module):
    """Channelwise learned distribution with quantized-friendly tails.

    `filters` gives the hidden widths of the monotone stack; the default
    yields four layers (1 -> 3 -> 3 -> 3 -> 1).
    """

    def __init__(
        self,
        channels: int,
        filters: tuple[int, ...] = (3, 3, 3),
        init_scale: float = 10.0,
        tail_mass: float = 2.0 ** -8,
    ):
        super().__init__()
        self.channels = channels
        self.tail_mass = tail_mass
        dims = (1, *filters, 1)
        scale = init_scale ** (1.0 / (len(dims) - 1))
        self.layers = nn.ModuleList(
            _MonotoneLayer(channels, dims[i], dims[i + 1], scale, factor=i < len(dims) - 2)
            for i in range(len(dims) - 1)
        )
        q = torch.tensor([-init_scale, 0.0, init_scale]).repeat(channels, 1, 1)
        self.quantiles = nn.Parameter(q)

    @classmethod
    def standard_logistic(cls, channels: int) -> "FactorizedPrior":
        """Degenerate single-layer prior whose CDF is the standard logistic."""
        prior = cls(channels, filters=())
        with torch.no_grad():
            prior.layers[0].weight.fill_(math.log(math.expm1(1.0)))
            prior.layers[0].bias.zero_()
        return prior

    def logits(self, values: torch.Tensor, detach_params: bool = False) -> torch.Tensor:
        """Cumulative logit per channel; values shaped (channels, 1, n)."""
        x = values
        for layer in self.layers:
            x = layer(x, detach_params=detach_params)
        return x

    def _flatten(self, values: torch.Tensor) -> tuple[torch.Tensor, torch.Size]:
        if values.dim() != 4 or values.shape[1] != self.channels:
            raise InvalidInput(
                f"expected (N, {self.channels}, H, W) hyper latents, got {tuple(values.shape)}"
            )
        shape = values.shape
        flat = values.permute(1, 0, 2, 3).reshape(self.channels, 1, -1)
        return flat, shape

    def _unflatten(self, flat: torch.Tensor, shape: torch.Size) -> torch.Tensor:
        return flat.reshape(self.channels, shape[0], shape[2], shape[3]).permute(1, 0, 2, 3)

    def likelihood(self, values: torch.Tensor) -> torch.Tensor:
        """P(value falls in its unit bin), same shape as `values`."""
        if not torch.isfinite(values).all():
            raise InvalidInput("non-finite hyper latents")
        flat, shape = self._flatten(values)
        lower = self.logits(flat - 0.5)
        upper = self.logits(flat + 0.5)
        # Evaluate both sigmoids on the tail side for numerical stability;
        # the symmetric case must map to -1, never 0.
        sign = torch.where((lower + upper).detach() >= 0, -1.0, 1.0).to(flat.dtype)
        p = torch.abs(torch.sigmoid(sign * upper) - torch.sigmoid(sign * lower))
        return self._unflatten(p, shape)

    def aux_loss(self) -> torch.Tensor:
        """Pulls the quantile parameters to the configured tail masses.

        Gradients reach only `self.quantiles`; the distribution itself is
        detached so support estimation never distorts the coding model.
        """
        t = self.tail_mass / 2.0
        target = torch.tensor(
            [math.log(t / (1 - t)), 0.0, -math.log(t / (1 - t))],
            device=self.quantiles.device,
        )
        logits = self.logits(self.quantiles, detach_params=True)
        return torch.abs(logits - target.reshape(1, 1, 3)).sum()

    def support(self) -> tuple[torch.Tensor, torch.Tensor]:
        """Per-channel closed integer range [lo, hi] covering the mass."""
        with torch.no_grad():
            lo = torch.floor(self.quantiles[:, 0, 0]).long() - SUPPORT_MARGIN
            hi = torch.ceil(self.quantiles[:, 0, 2]).long() + SUPPORT_MARGIN
            hi = torch.max(hi, lo + 1)
        return lo, hi

    def clamp_to_support(self, values: torch.Tensor) -> torch.Tensor:
        lo, hi = self.support()
        lo = lo.to(values.dtype).reshape(1, -1, 1, 1)
        hi = hi.to(values.dtype).reshape(1, -1, 1, 1)
        return torch.min(torch.max(values, lo), hi)

    def bin_pmf(self, channel: int, lo: int, hi: int) -> torch.Tensor:
        """Float pmf of integer bins lo..hi for one channel, tails folded in."""
        with torch.no_grad():
            values = torch.arange(lo, hi + 1, dtype=torch.float32).reshape(1, 1, -1)
            flat = values.repeat(self.channels, 1, 1)
            lower = torch.sigmoid(self.logits(flat - 0.5)[channel, 0])
            upper = torch.sigmoid(self.logits(flat + 0.5)[channel, 0])
            pmf = upper - lower
            pmf[0] = upper[0]
            pmf[-1] = 1.0 - lower[-1]
        return pmf.clamp_min(0.0)


def floored_likelihood(p: torch.Tensor) -> torch.Tensor:
    return lower_bound(p, P_FLOOR)

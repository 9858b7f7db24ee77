"""Hierarchical hyper transform: latents -> side info -> (mu, sigma).

The hyper encoder augments its own latent lane additively (noise during
training, rounding at test time) and the hyper synthesis predicts the mean
and scale used both to center the main latents before quantization and to
entropy-code them.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from cnfv.canf_core.nets import HyperAnalysisNet, HyperSynthesisNet
from cnfv.canf_core.quantizer import QuantizerMode, lower_bound, quantize
from cnfv.canf_core.rates import SIGMA_MIN
from cnfv.errors import ContractViolation


class HyperTransform(nn.Module):
    def __init__(self, channels: int, temporal_ch: int = 0, sigma_min: float = SIGMA_MIN):
        super().__init__()
        self.analysis = HyperAnalysisNet(channels)
        self.synthesis = HyperSynthesisNet(channels, temporal_ch)
        self.channels = channels
        self.sigma_min = sigma_min

    def encode(
        self,
        z: torch.Tensor,
        mode: QuantizerMode,
        noise: torch.Tensor | None = None,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """z -> quantized hyper latent h_hat.

        The additive augmentation input is uniform noise during training and
        identically zero at test time; supplying nonzero noise in round mode
        is a contract violation (quantize enforces it).
        """
        mode = QuantizerMode(mode)
        if mode is QuantizerMode.TEST_ROUND and noise is not None and bool((noise != 0).any()):
            raise ContractViolation("hyper augmentation noise must be zero in test_round mode")
        if mode is QuantizerMode.TEST_ROUND:
            noise = None
        return quantize(self.analysis(z), mode, noise=noise, generator=generator)

    def predict(
        self, h_hat: torch.Tensor, temporal: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """h_hat (+ temporal features) -> (mu, sigma), sigma floored."""
        raw = self.synthesis(h_hat, temporal)
        mu, sigma_raw = raw.chunk(2, dim=1)
        sigma = lower_bound(F.softplus(sigma_raw), self.sigma_min)
        return mu, sigma

    def quantize_main(
        self,
        z: torch.Tensor,
        mu: torch.Tensor,
        mode: QuantizerMode,
        noise: torch.Tensor | None = None,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """Center the main latent on mu and quantize the residual."""
        return quantize(z - mu, mode, noise=noise, generator=generator)

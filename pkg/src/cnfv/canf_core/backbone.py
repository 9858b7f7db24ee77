"""Conditional augmented coder: coupling chain + hyper transform + priors.

The coupling chain is an exact bijection between (data, 0) and (y2, z2);
quantization enters only through the hyper path.  At test time the decoder
substitutes the condition tensor for y2, so encode builds its reconstruction
through the very same decode computation the receiver will run.
"""

from dataclasses import dataclass

import torch
import torch.nn as nn

from cnfv.canf_core.coupling import CouplingPair
from cnfv.canf_core.hyper import HyperTransform
from cnfv.canf_core.nets import AnalysisNet, SynthesisNet, TemporalPriorNet
from cnfv.canf_core.prior import FactorizedPrior
from cnfv.canf_core.quantizer import QuantizerMode
from cnfv.canf_core.rates import factorized_rate_bits, gaussian_rate_bits
from cnfv.canf_core.scales import clamp_to_grid_support, snap_sigma
from cnfv.errors import InvalidInput


@dataclass
class CanfResult:
    """Everything one coding pass produces.

    Rates are totals in bits.  `z_sym` / `h_sym` are the centered quantized
    latents actually written to the bitstream (test mode); in train mode
    they equal the noisy surrogates.  `sigma_coding` is the grid-snapped
    sigma used for entropy coding (test mode only).
    """

    y2: torch.Tensor
    z2: torch.Tensor
    z_sym: torch.Tensor
    h_sym: torch.Tensor
    mu: torch.Tensor
    sigma: torch.Tensor
    sigma_coding: torch.Tensor | None
    rate_z_bits: torch.Tensor
    rate_h_bits: torch.Tensor
    recon: torch.Tensor


class CanfCoder(nn.Module):
    """Stacks `steps` coupling pairs over one hyper transform and prior.

    `cond_ch == 0` builds an unconditioned coder (the residual ablation);
    `temporal_ch == 0` disables the temporal prior path.
    """

    def __init__(
        self,
        data_ch: int,
        cond_ch: int,
        channels: int,
        steps: int = 2,
        temporal_ch: int = 0,
        couplings: list[CouplingPair] | None = None,
        hyper: HyperTransform | None = None,
        prior: FactorizedPrior | None = None,
    ):
        super().__init__()
        if steps not in (1, 2, 3):
            raise InvalidInput(f"coupling steps must be 1, 2 or 3, got {steps}")
        conditioned = cond_ch > 0
        if couplings is None:
            couplings = [
                CouplingPair(
                    AnalysisNet(data_ch + cond_ch, channels),
                    SynthesisNet(data_ch, channels),
                    conditioned=conditioned,
                )
                for _ in range(steps)
            ]
        self.couplings = nn.ModuleList(couplings)
        self.hyper = hyper if hyper is not None else HyperTransform(
            channels, temporal_ch=channels if temporal_ch else 0
        )
        self.temporal = TemporalPriorNet(temporal_ch, channels) if temporal_ch else None
        self.prior = prior if prior is not None else FactorizedPrior(channels)
        self.data_ch = data_ch
        self.cond_ch = cond_ch
        self.channels = channels

    @property
    def steps(self) -> int:
        return len(self.couplings)

    def _condition(self, x: torch.Tensor, condition: torch.Tensor | None) -> torch.Tensor | None:
        if self.cond_ch == 0:
            return None
        if condition is None:
            raise InvalidInput("coder is conditioned but no condition tensor was given")
        if condition.shape[1] != self.cond_ch or condition.shape[-2:] != x.shape[-2:]:
            raise InvalidInput(
                f"condition shape {tuple(condition.shape)} does not match data {tuple(x.shape)}"
            )
        return condition

    def forward_transform(
        self,
        x: torch.Tensor,
        condition: torch.Tensor | None = None,
        augmentation: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Exact bijection (x, e) -> (y2, z2); no quantization anywhere.

        ``augmentation`` is the initial value of the augmented variable; the
        codec always uses zeros (the default).
        """
        condition = self._condition(x, condition)
        z: torch.Tensor | None = augmentation
        for pair in self.couplings:
            x, z = pair.encode(x, z, condition)
            x, z = pair.decode(x, z)
        return x, z

    def inverse_transform(
        self, y2: torch.Tensor, z2: torch.Tensor, condition: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Exact inverse of forward_transform; returns (x, augmentation residual).

        The residual recovers the all-zero augmentation input up to float
        round-off.
        """
        condition = self._condition(y2, condition)
        x, z = y2, z2
        for pair in reversed(self.couplings):
            x = pair.invert_decode(x, z)
            z = pair.invert_encode(x, z, condition)
        return x, z

    def temporal_features(self, temporal_input: torch.Tensor | None) -> torch.Tensor | None:
        if self.temporal is None or temporal_input is None:
            return None
        return self.temporal(temporal_input)

    def _reconstruct(
        self, z_sym: torch.Tensor, mu: torch.Tensor, condition: torch.Tensor | None
    ) -> torch.Tensor:
        """Shared decoder tail: runs for both encode-side recon and decode."""
        z = z_sym + mu
        y = condition
        for i in range(len(self.couplings) - 1, -1, -1):
            pair = self.couplings[i]
            if y is None:
                y = torch.zeros_like(pair.decoder_net(z))
            y = pair.invert_decode(y, z)
            if i > 0:
                z = pair.invert_encode(y, z, condition)
        return y

    def encode(
        self,
        x: torch.Tensor,
        condition: torch.Tensor | None = None,
        temporal_input: torch.Tensor | None = None,
        mode: QuantizerMode = QuantizerMode.TRAIN_NOISE,
        noise_h: torch.Tensor | None = None,
        noise_z: torch.Tensor | None = None,
        generator: torch.Generator | None = None,
    ) -> CanfResult:
        """Full coding pass.

        Test mode additionally aligns with the entropy coder: sigma snaps to
        the 64-point coding grid and symbols clamp into table support, so the
        reported rate is the rate of the stream actually written.
        """
        mode = QuantizerMode(mode)
        cond = self._condition(x, condition)
        y2, z2 = self.forward_transform(x, cond)
        h_sym = self.hyper.encode(z2, mode, noise=noise_h, generator=generator)
        if mode is QuantizerMode.TEST_ROUND:
            h_sym = self.prior.clamp_to_support(h_sym)
        tfeat = self.temporal_features(temporal_input)
        mu, sigma = self.hyper.predict(h_sym, tfeat)
        z_sym = self.hyper.quantize_main(z2, mu, mode, noise=noise_z, generator=generator)
        sigma_coding = None
        if mode is QuantizerMode.TEST_ROUND:
            sigma_coding = snap_sigma(sigma)
            z_sym = clamp_to_grid_support(z_sym, sigma_coding)
            rate_z = gaussian_rate_bits(z_sym, torch.zeros_like(mu), sigma_coding)
        else:
            rate_z = gaussian_rate_bits(z_sym, torch.zeros_like(mu), sigma)
        rate_h = factorized_rate_bits(h_sym, self.prior)
        recon = self._reconstruct(z_sym, mu, cond)
        return CanfResult(
            y2=y2,
            z2=z2,
            z_sym=z_sym,
            h_sym=h_sym,
            mu=mu,
            sigma=sigma,
            sigma_coding=sigma_coding,
            rate_z_bits=rate_z,
            rate_h_bits=rate_h,
            recon=recon,
        )

    def decode(
        self,
        z_sym: torch.Tensor,
        h_sym: torch.Tensor,
        condition: torch.Tensor | None = None,
        temporal_input: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Receiver-side reconstruction from entropy-decoded symbols."""
        cond = None
        if self.cond_ch:
            if condition is None:
                raise InvalidInput("coder is conditioned but no condition tensor was given")
            cond = condition
        tfeat = self.temporal_features(temporal_input)
        mu, _ = self.hyper.predict(h_sym, tfeat)
        return self._reconstruct(z_sym, mu, cond)

    def predict_for_coding(
        self,
        h_sym: torch.Tensor,
        temporal_input: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(mu, grid-snapped sigma) as the entropy decoder needs them."""
        tfeat = self.temporal_features(temporal_input)
        mu, sigma = self.hyper.predict(h_sym, tfeat)
        return mu, snap_sigma(sigma)

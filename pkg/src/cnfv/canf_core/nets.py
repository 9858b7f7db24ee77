"""Shared network building blocks for the coding lanes.

Analysis/synthesis stacks use stride-2 convolutions (4 stages between the
data plane and the latent plane, 2 more for the hyper plane) with residual
blocks at intermediate resolutions.  Output layers are zero-initialized by
default so a freshly built transform is the identity of its lane: encoders
emit zeros and decoders subtract nothing.
"""

import torch
import torch.nn as nn


def conv(in_ch: int, out_ch: int, kernel: int = 5, stride: int = 2) -> nn.Conv2d:
    return nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=kernel // 2)


def deconv(in_ch: int, out_ch: int, kernel: int = 5, stride: int = 2) -> nn.ConvTranspose2d:
    # Padding chosen so the output is exactly stride * input.
    padding = (kernel - stride + 1) // 2
    output_padding = stride + 2 * padding - kernel
    return nn.ConvTranspose2d(
        in_ch, out_ch, kernel, stride=stride, padding=padding, output_padding=output_padding
    )


def zero_init_(module: nn.Module) -> nn.Module:
    """Zero the weights and bias of a conv layer in place."""
    nn.init.zeros_(module.weight)
    if module.bias is not None:
        nn.init.zeros_(module.bias)
    return module


class ResBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = conv(channels, channels, 3, 1)
        self.conv2 = conv(channels, channels, 3, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.conv2(torch.relu(self.conv1(torch.relu(x))))
        return x + h


class AnalysisNet(nn.Module):
    """Data plane -> latent plane, downsampling by 16.

    Used as the additive encoder half of a coupling pair; `in_ch` includes
    any concatenated condition channels.
    """

    def __init__(self, in_ch: int, channels: int, zero_init: bool = True):
        super().__init__()
        self.stack = nn.Sequential(
            conv(in_ch, channels),
            nn.ReLU(inplace=True),
            conv(channels, channels),
            ResBlock(channels),
            conv(channels, channels),
            ResBlock(channels),
            conv(channels, channels),
        )
        if zero_init:
            zero_init_(self.stack[-1])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.stack(x)


class SynthesisNet(nn.Module):
    """Latent plane -> data plane, upsampling by 16 (decoder half)."""

    def __init__(self, out_ch: int, channels: int, zero_init: bool = True):
        super().__init__()
        self.stack = nn.Sequential(
            deconv(channels, channels),
            ResBlock(channels),
            deconv(channels, channels),
            ResBlock(channels),
            deconv(channels, channels),
            nn.ReLU(inplace=True),
            deconv(channels, out_ch),
        )
        if zero_init:
            zero_init_(self.stack[-1])

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.stack(z)


class HyperAnalysisNet(nn.Module):
    """Latent plane -> hyper plane, downsampling by 4."""

    def __init__(self, channels: int, zero_init: bool = True):
        super().__init__()
        self.stack = nn.Sequential(
            conv(channels, channels),
            nn.ReLU(inplace=True),
            conv(channels, channels),
        )
        if zero_init:
            zero_init_(self.stack[-1])

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.stack(z)


class HyperSynthesisNet(nn.Module):
    """Hyper plane -> (mu, raw sigma) on the latent plane.

    Temporal-prior features, when enabled, enter by concatenation at the
    latent resolution before the prediction head; the head is
    zero-initialized so mu starts at zero and sigma at softplus(0).
    """

    def __init__(self, channels: int, temporal_ch: int = 0):
        super().__init__()
        self.trunk = nn.Sequential(
            deconv(channels, channels),
            nn.ReLU(inplace=True),
            deconv(channels, channels),
            nn.ReLU(inplace=True),
        )
        self.head = nn.Sequential(
            conv(channels + temporal_ch, channels, 3, 1),
            nn.ReLU(inplace=True),
            conv(channels, 2 * channels, 3, 1),
        )
        zero_init_(self.head[-1])
        self.temporal_ch = temporal_ch

    def forward(self, h: torch.Tensor, temporal: torch.Tensor | None = None) -> torch.Tensor:
        f = self.trunk(h)
        if self.temporal_ch:
            if temporal is None:
                temporal = f.new_zeros(f.shape[0], self.temporal_ch, *f.shape[2:])
            f = torch.cat([f, temporal], dim=1)
        return self.head(f)


class TemporalPriorNet(nn.Module):
    """Condition frame -> features at the latent resolution (1/16).

    Four stride-2 stages so the output aligns spatially with the latents
    it conditions.
    """

    def __init__(self, in_ch: int, channels: int):
        super().__init__()
        self.stack = nn.Sequential(
            conv(in_ch, channels),
            nn.ReLU(inplace=True),
            conv(channels, channels),
            nn.ReLU(inplace=True),
            conv(channels, channels),
            nn.ReLU(inplace=True),
            conv(channels, channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.stack(x)


class UNet(nn.Module):
    """Small 3-level U-Net used for flow extrapolation and motion refinement."""

    def __init__(self, in_ch: int, out_ch: int, base: int = 16, zero_init: bool = True):
        super().__init__()
        w1, w2, w3 = base, base * 2, base * 3
        self.enc1 = nn.Sequential(conv(in_ch, w1, 3, 1), nn.ReLU(inplace=True), conv(w1, w1, 3, 1))
        self.down1 = conv(w1, w2, 3, 2)
        self.enc2 = nn.Sequential(nn.ReLU(inplace=True), conv(w2, w2, 3, 1))
        self.down2 = conv(w2, w3, 3, 2)
        self.mid = nn.Sequential(nn.ReLU(inplace=True), conv(w3, w3, 3, 1), nn.ReLU(inplace=True))
        self.up2 = deconv(w3, w2, 4, 2)
        self.dec2 = nn.Sequential(nn.ReLU(inplace=True), conv(w2, w2, 3, 1))
        self.up1 = deconv(w2, w1, 4, 2)
        self.dec1 = nn.Sequential(nn.ReLU(inplace=True), conv(w1, w1, 3, 1), nn.ReLU(inplace=True))
        self.out = conv(w1, out_ch, 3, 1)
        if zero_init:
            zero_init_(self.out)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h, w = x.shape[-2:]
        if h % 4 or w % 4:
            from cnfv.errors import InvalidInput

            raise InvalidInput(f"UNet input must be a multiple of 4, got {h}x{w}")
        e1 = self.enc1(x)
        e2 = self.enc2(self.down1(e1))
        m = self.mid(self.down2(e2))
        d2 = self.dec2(self.up2(m) + e2)
        d1 = self.dec1(self.up1(d2) + e1)
        return self.out(d1)

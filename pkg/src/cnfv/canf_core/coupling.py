"""Additive coupling pair: the invertible unit of the augmented coder.

Each pair owns an encoder network feeding the latent lane and a decoder
network feeding the data lane.  Both updates are purely additive (all
scale factors fixed to one), so each pair is volume preserving and its
Jacobian log-determinant is exactly zero.
"""

from typing import Callable

import torch
import torch.nn as nn

from cnfv.errors import InvalidInput

NetFn = Callable[[torch.Tensor], torch.Tensor]


def _check_spatial(name_a: str, a: torch.Tensor, name_b: str, b: torch.Tensor) -> None:
    if a.shape[0] != b.shape[0] or a.shape[-2:] != b.shape[-2:]:
        raise InvalidInput(
            f"{name_a} {tuple(a.shape)} and {name_b} {tuple(b.shape)} do not align"
        )


class CouplingPair(nn.Module):
    """One encode/decode step of the additive flow.

    encoder_net maps the (optionally condition-concatenated) data lane to a
    latent-lane update; decoder_net maps the latent lane to a data-lane
    update.  `conditioned` controls whether encode expects a condition
    tensor to concatenate.
    """

    def __init__(self, encoder_net: nn.Module, decoder_net: nn.Module, conditioned: bool = True):
        super().__init__()
        self.encoder_net = encoder_net
        self.decoder_net = decoder_net
        self.conditioned = conditioned

    def encoder_input(self, x: torch.Tensor, condition: torch.Tensor | None) -> torch.Tensor:
        if not self.conditioned:
            return x
        if condition is None:
            raise InvalidInput("coupling pair is conditioned but no condition was given")
        _check_spatial("data", x, "condition", condition)
        return torch.cat([x, condition], dim=1)

    def encode(
        self, x: torch.Tensor, z: torch.Tensor | None, condition: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(x, z) -> (x, z + enc(x|condition)); z=None stands for zeros."""
        update = self.encoder_net(self.encoder_input(x, condition))
        z_out = update if z is None else z + update
        return x, z_out

    def decode(self, x: torch.Tensor, z: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(x, z) -> (x - dec(z), z)."""
        _check_spatial_latent(x, z)
        return x - self.decoder_net(z), z

    def invert_decode(self, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """Recover x from decode's output: y + dec(z)."""
        return y + self.decoder_net(z)

    def invert_encode(
        self, x: torch.Tensor, z_out: torch.Tensor, condition: torch.Tensor | None = None
    ) -> torch.Tensor:
        """Recover the incoming z from encode's output."""
        return z_out - self.encoder_net(self.encoder_input(x, condition))


def _check_spatial_latent(x: torch.Tensor, z: torch.Tensor) -> None:
    if x.shape[0] != z.shape[0]:
        raise InvalidInput(f"batch mismatch: data {tuple(x.shape)} vs latent {tuple(z.shape)}")

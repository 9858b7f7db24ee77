"""Inter-frame coder: codes x_t given the motion-compensated frame x_c.

"conditional" mode runs the augmented coder with x_c as both coupling
condition and decode-time substitute for y2, so the y2 lane is anchored to
x_c.  "residual" mode drops all conditioning and codes x_t - x_c the way a
plain intra coder would, with the anchor target at zero.
"""

import torch
import torch.nn as nn

from cnfv.canf_core.backbone import CanfCoder, CanfResult
from cnfv.canf_core.quantizer import QuantizerMode
from cnfv.errors import InvalidInput


class InterFrameCoder(nn.Module):
    def __init__(
        self,
        channels: int,
        steps: int = 2,
        mode: str = "conditional",
        temporal_prior: bool = True,
    ):
        super().__init__()
        if mode not in ("conditional", "residual"):
            raise InvalidInput(f"unknown inter coding mode {mode!r}")
        self.mode = mode
        self.coder = CanfCoder(
            data_ch=3,
            cond_ch=3 if mode == "conditional" else 0,
            channels=channels,
            steps=steps,
            temporal_ch=3 if temporal_prior else 0,
        )

    def encode_frame(
        self,
        frame: torch.Tensor,
        condition: torch.Tensor,
        mode: QuantizerMode,
        generator: torch.Generator | None = None,
    ) -> tuple[torch.Tensor, CanfResult]:
        """Returns (reconstruction, coding result); recon is unclamped."""
        temporal = condition if self.coder.temporal is not None else None
        if self.mode == "residual":
            result = self.coder.encode(
                frame - condition, None, temporal, mode, generator=generator
            )
            return condition + result.recon, result
        result = self.coder.encode(frame, condition, temporal, mode, generator=generator)
        return result.recon, result

    def decode_frame(
        self, z_sym: torch.Tensor, h_sym: torch.Tensor, condition: torch.Tensor
    ) -> torch.Tensor:
        temporal = condition if self.coder.temporal is not None else None
        if self.mode == "residual":
            return condition + self.coder.decode(z_sym, h_sym, None, temporal)
        return self.coder.decode(z_sym, h_sym, condition, temporal)

    def anchor_target(self, condition: torch.Tensor) -> torch.Tensor:
        """What the y2 lane is pulled toward by the anchor loss term."""
        return condition if self.mode == "conditional" else torch.zeros_like(condition)

    @property
    def prior(self):
        return self.coder.prior

"""Rate-distortion objective for one coded P-frame.

total = bits-per-pixel + lambda1 * anchor + lambda2 * distortion, with the
anchor pulling the inter coder's y2 lane toward its substitution target
(the compensated frame, or zero in residual mode).  All rate fields stay
in bits; per-pixel normalization happens only in `total`.
"""

from dataclasses import dataclass, fields

import torch

from cnfv.codec import PFrameResult
from cnfv.errors import DivergenceError
from cnfv.harness.metrics import ms_ssim
from cnfv.training.config import TrainConfig


@dataclass
class LossBreakdown:
    rate_motion_z_bits: torch.Tensor
    rate_motion_h_bits: torch.Tensor
    rate_inter_z_bits: torch.Tensor
    rate_inter_h_bits: torch.Tensor
    anchor: torch.Tensor
    distortion: torch.Tensor
    bpp: torch.Tensor
    total: torch.Tensor

    def check_finite(self, step: int | None = None) -> "LossBreakdown":
        for f in fields(self):
            value = getattr(self, f.name)
            if not torch.isfinite(value).all():
                at = "" if step is None else f" at step {step}"
                raise DivergenceError(f"{f.name} became non-finite{at}")
        return self

    def detached(self) -> dict:
        return {
            f.name: float(getattr(self, f.name).detach()) for f in fields(self)
        }


def distortion_term(x_t: torch.Tensor, x_hat: torch.Tensor, kind: str) -> torch.Tensor:
    if kind == "mse":
        return torch.mean((x_t - x_hat) ** 2)
    return 1.0 - ms_ssim(x_hat.clamp(0.0, 1.0), x_t)


def pframe_loss(result: PFrameResult, x_t: torch.Tensor, cfg: TrainConfig) -> LossBreakdown:
    n_pixels = x_t.shape[0] * x_t.shape[-1] * x_t.shape[-2]
    rate_bits = result.total_bits
    bpp = rate_bits / n_pixels
    anchor_target = result.x_c if cfg.codec.inter_mode == "conditional" else torch.zeros_like(result.x_c)
    anchor = torch.mean((result.inter.y2 - anchor_target) ** 2)
    dist = distortion_term(x_t, result.x_hat, cfg.distortion)
    total = bpp + cfg.effective_lambda1 * anchor + cfg.lambda2 * dist
    return LossBreakdown(
        rate_motion_z_bits=result.motion.rate_z_bits,
        rate_motion_h_bits=result.motion.rate_h_bits,
        rate_inter_z_bits=result.inter.rate_z_bits,
        rate_inter_h_bits=result.inter.rate_h_bits,
        anchor=anchor,
        distortion=dist,
        bpp=bpp,
        total=total,
    )


def motion_warmup_loss(
    result: PFrameResult, x_t: torch.Tensor, cfg: TrainConfig
) -> torch.Tensor:
    """Motion-only objective for the warmup phase.

    Rates of the motion chunk plus distortion of the compensated frame;
    the inter coder is not run at all during warmup.
    """
    n_pixels = x_t.shape[0] * x_t.shape[-1] * x_t.shape[-2]
    bpp = (result.motion.rate_z_bits + result.motion.rate_h_bits) / n_pixels
    dist = distortion_term(x_t, result.x_c, cfg.distortion)
    return bpp + cfg.lambda2 * dist

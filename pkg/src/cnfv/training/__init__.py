"""Training: rate-distortion objective, data pipelines, optimization loop."""

from cnfv.training.config import (
    MSSSIM_LAMBDAS,
    PSNR_LAMBDAS,
    TrainConfig,
    lambda_schedule,
)
from cnfv.training.loss import LossBreakdown, pframe_loss
from cnfv.training.loop import TrainResult, train

__all__ = [
    "TrainConfig",
    "PSNR_LAMBDAS",
    "MSSSIM_LAMBDAS",
    "lambda_schedule",
    "LossBreakdown",
    "pframe_loss",
    "TrainResult",
    "train",
]

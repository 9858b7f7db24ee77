"""The 64-point log-spaced sigma grid shared by model and entropy coder.

Scales are snapped to the nearest grid point in log space; each grid point
carries a finite symbol support of +-ceil(6 sigma), wide enough that the
folded tail mass is negligible at 16-bit table precision.
"""

import math

import numpy as np
import torch

SCALE_MIN = 0.11
SCALE_MAX = 256.0
SCALE_LEVELS = 64
TAIL_MULT = 6.0

_LOG_MIN = math.log(SCALE_MIN)
_LOG_STEP = (math.log(SCALE_MAX) - _LOG_MIN) / (SCALE_LEVELS - 1)


def scale_grid() -> np.ndarray:
    """All 64 sigma values, ascending, float64."""
    return np.exp(_LOG_MIN + _LOG_STEP * np.arange(SCALE_LEVELS))


def support_max(sigma: float) -> int:
    """Largest coded magnitude for a grid sigma."""
    return max(1, math.ceil(TAIL_MULT * sigma))


def grid_index(sigma: torch.Tensor) -> torch.Tensor:
    """Nearest grid index in log space, clamped to the grid."""
    idx = torch.round((torch.log(sigma) - _LOG_MIN) / _LOG_STEP)
    return idx.clamp_(0, SCALE_LEVELS - 1).long()


def snap_sigma(sigma: torch.Tensor) -> torch.Tensor:
    grid = torch.as_tensor(scale_grid(), dtype=sigma.dtype, device=sigma.device)
    return grid[grid_index(sigma)]


def clamp_to_grid_support(z_sym: torch.Tensor, sigma_coding: torch.Tensor) -> torch.Tensor:
    """Clamp symbols into the table support of their snapped sigma."""
    grid = scale_grid()
    smax = np.array([support_max(s) for s in grid], dtype=np.float32)
    smax_t = torch.as_tensor(smax, dtype=z_sym.dtype, device=z_sym.device)
    bound = smax_t[grid_index(sigma_coding)]
    return torch.min(torch.max(z_sym, -bound), bound)

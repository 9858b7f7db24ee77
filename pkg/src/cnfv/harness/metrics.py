"""Quality metrics on [0,1] RGB tensors.

PSNR is computed per frame over all channels and capped at 99 dB so
identical frames stay finite.  MS-SSIM uses the standard 5-scale weights
with an 11x11 Gaussian window (sigma 1.5); when a frame is too small for
5 scales the pyramid shrinks automatically, never below 2 scales, and the
remaining weights are renormalized.
"""

import math

import torch
import torch.nn.functional as F

from cnfv.errors import InvalidInput

PSNR_CAP_DB = 99.0
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
_K1, _K2 = 0.01, 0.03


def _as_batched(x: torch.Tensor) -> torch.Tensor:
    if x.dim() == 3:
        return x.unsqueeze(0)
    if x.dim() == 4:
        return x
    raise InvalidInput(f"expected (C,H,W) or (N,C,H,W), got {tuple(x.shape)}")


def psnr_rgb(a: torch.Tensor, b: torch.Tensor, cap: float = PSNR_CAP_DB) -> float:
    """Peak signal-to-noise ratio in dB for one frame (or one batch mean)."""
    a, b = _as_batched(a), _as_batched(b)
    if a.shape != b.shape:
        raise InvalidInput(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    mse = float(torch.mean((a.double() - b.double()) ** 2))
    if mse <= 0.0:
        return cap
    return min(10.0 * math.log10(1.0 / mse), cap)


def _window(channels: int, dtype, device) -> torch.Tensor:
    half = (WINDOW_SIZE - 1) / 2.0
    coords = torch.arange(WINDOW_SIZE, dtype=torch.float64) - half
    g = torch.exp(-(coords ** 2) / (2.0 * WINDOW_SIGMA ** 2))
    g = (g / g.sum()).to(dtype=dtype, device=device)
    return g.reshape(1, 1, 1, WINDOW_SIZE).repeat(channels, 1, 1, 1)


def _blur(x: torch.Tensor, window: torch.Tensor) -> torch.Tensor:
    c = x.shape[1]
    x = F.conv2d(x, window, groups=c)
    return F.conv2d(x, window.transpose(2, 3), groups=c)


def _ssim_cs(a: torch.Tensor, b: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    window = _window(a.shape[1], a.dtype, a.device)
    c1 = _K1 ** 2
    c2 = _K2 ** 2
    mu_a = _blur(a, window)
    mu_b = _blur(b, window)
    mu_aa, mu_bb, mu_ab = mu_a * mu_a, mu_b * mu_b, mu_a * mu_b
    var_a = _blur(a * a, window) - mu_aa
    var_b = _blur(b * b, window) - mu_bb
    cov = _blur(a * b, window) - mu_ab
    cs = (2 * cov + c2) / (var_a + var_b + c2)
    ssim = ((2 * mu_ab + c1) / (mu_aa + mu_bb + c1)) * cs
    return ssim.mean(dim=(1, 2, 3)), cs.mean(dim=(1, 2, 3))


def usable_scales(height: int, width: int, max_scales: int = len(MS_SSIM_WEIGHTS)) -> int:
    """How many pyramid levels fit an 11-tap window; at least 2 required."""
    scales = 0
    side = min(height, width)
    while scales < max_scales and side >= WINDOW_SIZE:
        scales += 1
        side //= 2
    if scales < 2:
        raise InvalidInput(
            f"frame {height}x{width} too small for multi-scale SSIM "
            f"(needs min side >= {2 * WINDOW_SIZE})"
        )
    return scales


def ms_ssim(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Multi-scale SSIM; differentiable, returns a scalar tensor."""
    a, b = _as_batched(a), _as_batched(b)
    if a.shape != b.shape:
        raise InvalidInput(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    scales = usable_scales(a.shape[-2], a.shape[-1])
    weights = torch.tensor(
        MS_SSIM_WEIGHTS[:scales], dtype=a.dtype, device=a.device
    )
    weights = weights / weights.sum()
    terms = []
    for lvl in range(scales):
        ssim, cs = _ssim_cs(a, b)
        if lvl < scales - 1:
            terms.append(torch.relu(cs))
            a = F.avg_pool2d(a, 2)
            b = F.avg_pool2d(b, 2)
        else:
            terms.append(torch.relu(ssim))
    stacked = torch.stack(terms, dim=0)
    value = torch.prod(stacked ** weights.reshape(-1, 1), dim=0)
    return value.mean()


def ms_ssim_value(a: torch.Tensor, b: torch.Tensor) -> float:
    with torch.no_grad():
        return float(ms_ssim(a, b))

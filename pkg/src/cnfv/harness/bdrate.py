"""BD-rate between two rate-quality curves.

Monotone piecewise-cubic (PCHIP) interpolation of log-rate as a function
of quality, integrated exactly over the shared quality interval.  The
result is the average rate ratio minus one, in percent; negative means the
test curve needs fewer bits.  Identical curves give exactly 0.0.
"""

import math
import warnings

import numpy as np
from scipy.interpolate import PchipInterpolator

from cnfv.errors import InvalidInput, NoOverlapError

MIN_POINTS = 4


def _prepare(points: list[tuple[float, float]], label: str) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < MIN_POINTS:
        raise InvalidInput(
            f"{label} curve has {len(points)} points, needs at least {MIN_POINTS}"
        )
    rates = np.asarray([p[0] for p in points], dtype=np.float64)
    quality = np.asarray([p[1] for p in points], dtype=np.float64)
    if np.any(rates <= 0) or not np.all(np.isfinite(rates)) or not np.all(np.isfinite(quality)):
        raise InvalidInput(f"{label} curve has non-positive or non-finite entries")
    order = np.argsort(quality)
    quality, rates = quality[order], rates[order]
    if np.any(np.diff(quality) == 0):
        raise InvalidInput(f"{label} curve repeats a quality value")
    if np.any(np.diff(rates) <= 0):
        warnings.warn(f"{label} curve is not rate-monotone; interpolating anyway")
    return quality, np.log(rates)


def bd_rate_percent(
    anchor: list[tuple[float, float]], test: list[tuple[float, float]]
) -> float:
    """Average bitrate change of `test` against `anchor`, in percent.

    Points are (rate, quality) pairs; quality may be PSNR or MS-SSIM as
    long as both curves use the same metric.
    """
    aq, alog = _prepare(anchor, "anchor")
    tq, tlog = _prepare(test, "test")
    lo = max(aq.min(), tq.min())
    hi = min(aq.max(), tq.max())
    if not hi > lo:
        raise NoOverlapError(
            f"curves share no quality interval (anchor [{aq.min():.4f}, {aq.max():.4f}], "
            f"test [{tq.min():.4f}, {tq.max():.4f}])"
        )
    a_spline = PchipInterpolator(aq, alog)
    t_spline = PchipInterpolator(tq, tlog)
    avg_diff = (t_spline.integrate(lo, hi) - a_spline.integrate(lo, hi)) / (hi - lo)
    return (math.exp(avg_diff) - 1.0) * 100.0


def curve_from_records(records, metric: str = "psnr") -> list[tuple[float, float]]:
    """RD rows -> (bpp, quality) points for one sequence."""
    if metric == "psnr":
        return [(r.bpp, r.psnr_rgb) for r in records]
    if metric == "msssim":
        return [(r.bpp, r.ms_ssim) for r in records]
    raise InvalidInput(f"unknown metric {metric!r}")


def bd_rate_from_csv_rows(anchor_rows, test_rows, metric: str = "psnr") -> dict[str, float]:
    """Per-sequence BD-rate between two RD tables, matched by sequence name."""
    by_seq_a: dict[str, list] = {}
    for r in anchor_rows:
        by_seq_a.setdefault(r.sequence, []).append(r)
    by_seq_t: dict[str, list] = {}
    for r in test_rows:
        by_seq_t.setdefault(r.sequence, []).append(r)
    shared = sorted(set(by_seq_a) & set(by_seq_t))
    if not shared:
        raise InvalidInput("anchor and test tables share no sequences")
    return {
        seq: bd_rate_percent(
            curve_from_records(by_seq_a[seq], metric),
            curve_from_records(by_seq_t[seq], metric),
        )
        for seq in shared
    }

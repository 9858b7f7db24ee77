"""SVG rate-distortion plots."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from cnfv.errors import InvalidInput


def rd_plot(
    curves: dict[str, list[tuple[float, float]]], metric_label: str, out_path: str | Path
) -> None:
    """One SVG with bpp on x and quality on y, one line per label."""
    out_path = Path(out_path)
    if out_path.suffix.lower() != ".svg":
        raise InvalidInput(f"plot output must be .svg, got {out_path.name}")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, points in sorted(curves.items()):
        points = sorted(points)
        ax.plot(
            [p[0] for p in points], [p[1] for p in points],
            marker="o", markersize=3.5, linewidth=1.2, label=label,
        )
    ax.set_xlabel("bits per pixel")
    ax.set_ylabel(metric_label)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)

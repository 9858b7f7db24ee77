"""Paired ablation runs over the codec's configuration axes.

Every variant trains from the same seed on the same data and reports the
same test-mode RD loss, so differences isolate the single axis that
changed.  Variants are expressed as codec-config field overrides.
"""

import dataclasses
import json
from pathlib import Path

from cnfv.training.config import TrainConfig
from cnfv.training.loop import train

INTER_AXIS = {
    "conditional_tp": {"inter_mode": "conditional", "temporal_prior": True},
    "conditional_no_tp": {"inter_mode": "conditional", "temporal_prior": False},
    "residual_tp": {"inter_mode": "residual", "temporal_prior": True},
    "residual_no_tp": {"inter_mode": "residual", "temporal_prior": False},
}

MOTION_AXIS = {
    "cond_extrapolated": {"motion_mode": "conditional", "motion_condition": "extrapolated"},
    "residual_extrapolated": {"motion_mode": "residual", "motion_condition": "extrapolated"},
    "cond_previous": {"motion_mode": "conditional", "motion_condition": "previous"},
    "cond_none": {"motion_mode": "conditional", "motion_condition": "none"},
}

STEPS_AXIS = {
    "steps_1": {"coupling_steps": 1},
    "steps_2": {"coupling_steps": 2},
    "steps_3": {"coupling_steps": 3},
}

AXES = {"inter": INTER_AXIS, "motion": MOTION_AXIS, "steps": STEPS_AXIS}


def variant_config(base: TrainConfig, overrides: dict) -> TrainConfig:
    codec = dataclasses.replace(base.codec, **overrides)
    return dataclasses.replace(base, codec=codec)


def run_variant(base: TrainConfig, overrides: dict, out_dir: Path, dataset=None):
    cfg = variant_config(base, overrides)
    result = train(cfg, out_dir, dataset=dataset)
    return result.final


def run_ablation(
    base: TrainConfig, axes: list[str], out_root: str | Path, dataset=None
) -> dict:
    """Trains every variant of the requested axes; returns {axis: {name: stats}}."""
    out_root = Path(out_root)
    report: dict = {}
    for axis in axes:
        if axis not in AXES:
            from cnfv.errors import InvalidInput

            raise InvalidInput(f"unknown ablation axis {axis!r}; have {sorted(AXES)}")
        report[axis] = {}
        for name, overrides in AXES[axis].items():
            stats = run_variant(base, overrides, out_root / axis / name, dataset)
            report[axis][name] = stats
    (out_root / "ablation_report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report

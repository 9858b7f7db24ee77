"""Cached long-running artifacts for the acceptance tests.

Two acceptance criteria need trained models: the desk-scale overfit run and
the paired ablation grid.  Both take hours on one core, so their outputs are
cached under tests/.cache, keyed by a hash of the exact run specification.
Consumers must revalidate cached artifacts (recompute the metrics from the
checkpoint and curve files) rather than trust the stored summary.

`python3 tools/prepare_acceptance.py` prefills the cache; the tests fall
back to running everything inline when it is missing.
"""

import dataclasses
import hashlib
import json
import shutil
from pathlib import Path

from cnfv.codec import CodecConfig, load_checkpoint
from cnfv.training.ablate import run_ablation
from cnfv.training.config import TrainConfig
from cnfv.training.data import open_dataset
from cnfv.training.loop import evaluate_clip, train

SALT = "accept-v1"
CACHE = Path(__file__).resolve().parent / ".cache"

# The overfit run early-stops on its gates; if the official criteria are not
# met yet, it continues from the checkpoint.  Total steps stay under 20k.
OVERFIT_ROUNDS = (6000, 7000, 7000)
ABLATION_AXES = ["inter", "motion"]


def overfit_config(steps: int = OVERFIT_ROUNDS[0]) -> TrainConfig:
    return TrainConfig.desk_preset(
        steps=steps,
        warmup_fraction=0.0,
        data="synthetic:8",
        seed=7,
        lambda2=2048.0,
        eval_every=100,
    )


def ablation_base() -> TrainConfig:
    return TrainConfig(
        codec=CodecConfig(channels=32),
        lambda2=512.0,
        batch_size=4,
        crop_size=64,
        steps=800,
        warmup_fraction=0.05,
        seed=11,
        data="synthetic:16",
        eval_every=200,
    )


def _key(payload: dict) -> str:
    text = SALT + json.dumps(payload, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _reuse_or_clear(root: Path, key: str) -> dict | None:
    done = root / "done.json"
    if done.exists():
        meta = json.loads(done.read_text())
        if meta.get("key") == key:
            return meta
    if root.exists():
        shutil.rmtree(root)
    root.mkdir(parents=True)
    return None


def curve_mean(curve_path: str | Path, lo: int, hi: int) -> float:
    """Mean training loss over records with lo <= step < hi."""
    values = []
    with open(curve_path) as f:
        for line in f:
            rec = json.loads(line)
            if lo <= rec["step"] < hi:
                values.append(rec["total"])
    if not values:
        raise ValueError(f"{curve_path}: no records in [{lo}, {hi})")
    return sum(values) / len(values)


def final_mean(curve_paths: list[str | Path], n: int = 20) -> float:
    tail: list[float] = []
    for path in reversed(curve_paths):
        with open(path) as f:
            records = [json.loads(line)["total"] for line in f]
        tail = records[-(n - len(tail)):] + tail
        if len(tail) >= n:
            break
    return sum(tail) / len(tail)


def mean_dataset_psnr(codec, cfg: TrainConfig, dataset) -> float:
    vals = [
        evaluate_clip(codec, dataset[i]["frames"].unsqueeze(0), cfg)["psnr"]
        for i in range(len(dataset))
    ]
    return sum(vals) / len(vals)


def ensure_overfit(log=print) -> dict:
    spec = {
        "what": "overfit",
        "rounds": list(OVERFIT_ROUNDS),
        "cfg": json.loads(overfit_config().to_json()),
    }
    key = _key(spec)
    root = CACHE / "overfit"
    meta = _reuse_or_clear(root, key)
    if meta is not None:
        return meta

    base = overfit_config()
    dataset = open_dataset(base.data, base)
    codec = None
    curves: list[str] = []
    steps_total = 0
    psnr_gate = 31.0
    state = {"ma100": None}
    meta = {}

    for rnd, steps in enumerate(OVERFIT_ROUNDS):
        cfg = dataclasses.replace(overfit_config(steps), seed=base.seed + rnd)

        def stop_when(stats, capture=(rnd == 0), gate=psnr_gate):
            if capture and state["ma100"] is None and stats["step"] >= 100:
                state["ma100"] = stats["train_total_ma20"]
            if state["ma100"] is None or "psnr" not in stats:
                return False
            return (
                stats["psnr"] >= gate
                and stats["train_total_ma20"] <= 0.48 * state["ma100"]
            )

        result = train(cfg, root / f"round{rnd}", dataset=dataset, codec=codec,
                       stop_when=stop_when, log=log)
        steps_total += result.steps_run
        curves.append(str(result.curve))
        codec, _ = load_checkpoint(result.checkpoint)

        ma100 = curve_mean(curves[0], 90, 110)
        ma_final = final_mean(curves)
        mean_psnr = mean_dataset_psnr(codec, base, dataset)
        meta = {
            "key": key,
            "checkpoint": str(result.checkpoint),
            "curves": curves,
            "steps_total": steps_total,
            "rounds_run": rnd + 1,
            "ma100": ma100,
            "ma_final": ma_final,
            "mean_psnr": mean_psnr,
        }
        log(f"overfit round {rnd}: steps_total={steps_total} "
            f"ma100={ma100:.3f} ma_final={ma_final:.3f} mean_psnr={mean_psnr:.2f}")
        if ma_final <= 0.5 * ma100 and mean_psnr >= 30.0:
            break
        psnr_gate += 0.75

    (root / "done.json").write_text(json.dumps(meta, indent=2) + "\n")
    return meta


def ensure_ablation(log=print) -> dict:
    base = ablation_base()
    spec = {
        "what": "ablation",
        "axes": ABLATION_AXES,
        "cfg": json.loads(base.to_json()),
    }
    key = _key(spec)
    root = CACHE / "ablation"
    meta = _reuse_or_clear(root, key)
    if meta is not None:
        return meta
    report = run_ablation(base, ABLATION_AXES, root)
    meta = {"key": key, "root": str(root), "report": report}
    (root / "done.json").write_text(json.dumps(meta, indent=2) + "\n")
    log("ablation grid done")
    return meta

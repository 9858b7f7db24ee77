"""Optimization loop for the full codec.

Each step codes a batch of clips: the first frame enters the reference
buffer as 8-bit intra, the next frames are coded in order with references
detached, and the loss averages the last two coded frames.  The first
warmup fraction of steps trains the motion branch alone.  Prior quantiles
learn through their auxiliary loss in a higher-lr parameter group.
"""

import json
import statistics
from contextlib import nullcontext
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from cnfv.canf_core.quantizer import QuantizerMode, round_half_away
from cnfv.codec import VideoCodec
from cnfv.errors import DivergenceError
from cnfv.harness.metrics import psnr_rgb
from cnfv.motion_coder import ReferenceBuffer
from cnfv.training.config import TrainConfig
from cnfv.training.data import open_dataset
from cnfv.training.loss import motion_warmup_loss, pframe_loss

RUNAWAY_FACTOR = 10.0
RUNAWAY_PATIENCE = 100
BASELINE_STEPS = 20
AUX_LR = 1e-3


@dataclass
class TrainResult:
    checkpoint: Path
    steps_run: int
    stopped_early: bool
    curve: Path
    final: dict


def intra_reference(frame: torch.Tensor) -> torch.Tensor:
    """8-bit quantization, matching what the lossless intra path stores."""
    return round_half_away(frame * 255.0) / 255.0


def clip_loss(codec: VideoCodec, clips: torch.Tensor, cfg: TrainConfig, warmup: bool):
    """Mean training loss of the last two coded frames of a clip batch."""
    buffer = ReferenceBuffer()
    buffer.push_intra(intra_reference(clips[:, 0]))
    n_frames = clips.shape[1]
    totals = []
    last = None
    for t in range(1, n_frames):
        carries_loss = t >= n_frames - 2
        with nullcontext() if carries_loss else torch.no_grad():
            result = codec.code_pframe(
                clips[:, t], buffer, QuantizerMode.TRAIN_NOISE, run_inter=not warmup
            )
            if carries_loss:
                if warmup:
                    totals.append(motion_warmup_loss(result, clips[:, t], cfg))
                else:
                    last = pframe_loss(result, clips[:, t], cfg).check_finite()
                    totals.append(last.total)
        buffer.push(result.x_hat.detach(), result.f_hat.detach())
    return torch.stack(totals).mean(), last


def evaluate_clip(codec: VideoCodec, clip: torch.Tensor, cfg: TrainConfig) -> dict:
    """Test-mode RD stats over one clip (no entropy coding, exact rates)."""
    was_training = codec.training
    codec.eval()
    stats = {"bpp": 0.0, "psnr": 0.0, "loss": 0.0}
    with torch.no_grad():
        buffer = ReferenceBuffer()
        buffer.push_intra(intra_reference(clip[:, 0]))
        coded = 0
        for t in range(1, clip.shape[1]):
            result = codec.code_pframe(clip[:, t], buffer, QuantizerMode.TEST_ROUND)
            breakdown = pframe_loss(result, clip[:, t], cfg)
            stats["bpp"] += float(breakdown.bpp)
            stats["loss"] += float(breakdown.total)
            stats["psnr"] += psnr_rgb(result.x_hat, clip[:, t])
            buffer.push(result.x_hat, result.f_hat)
            coded += 1
    if was_training:
        codec.train()
    return {k: v / coded for k, v in stats.items()}


def train(
    cfg: TrainConfig,
    out_dir: str | Path,
    dataset=None,
    codec: VideoCodec | None = None,
    stop_when=None,
    log=None,
) -> TrainResult:
    """Runs the configured number of steps (or until stop_when says stop).

    `stop_when`, if given, is called with the stats dict after every
    `cfg.eval_every` steps and may return True to stop early.  `codec`
    allows fine-tuning from existing weights.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    if dataset is None:
        dataset = open_dataset(cfg.data, cfg)
    if codec is None:
        codec = VideoCodec(cfg.codec)
    codec.train()
    codec.invalidate_tables()

    aux_params = [p for name, p in codec.named_parameters() if name.endswith("quantiles")]
    aux_ids = {id(p) for p in aux_params}
    main_params = [p for p in codec.parameters() if id(p) not in aux_ids]
    opt = torch.optim.Adam(
        [
            {"params": main_params, "lr": cfg.learning_rate},
            {"params": aux_params, "lr": AUX_LR},
        ]
    )

    cfg.to_json(out_dir / "train_config.json")
    curve_path = out_dir / "loss_curve.jsonl"
    checkpoint = out_dir / "model.pt"
    baseline = None
    recent: list[float] = []
    runaway = 0
    stopped_early = False
    final_stats: dict = {}
    steps_run = 0

    with open(curve_path, "w") as curve:
        for step in range(cfg.steps):
            warmup = step < cfg.warmup_steps
            clips = dataset.batch(cfg.batch_size, rng)
            total, breakdown = clip_loss(codec, clips, cfg, warmup)
            aux = codec.inter.prior.aux_loss() + codec.motion.prior.aux_loss()
            opt.zero_grad()
            (total + aux).backward()
            torch.nn.utils.clip_grad_norm_(codec.parameters(), cfg.grad_clip)
            opt.step()
            steps_run = step + 1

            value = float(total.detach())
            if not np.isfinite(value):
                raise DivergenceError(f"training loss non-finite at step {step}")
            recent.append(value)
            if len(recent) == BASELINE_STEPS and baseline is None:
                baseline = statistics.median(recent)
            if baseline is not None and value > RUNAWAY_FACTOR * max(baseline, 1e-9):
                runaway += 1
                if runaway >= RUNAWAY_PATIENCE:
                    raise DivergenceError(
                        f"loss above {RUNAWAY_FACTOR}x its early level for "
                        f"{RUNAWAY_PATIENCE} consecutive steps (step {step})"
                    )
            else:
                runaway = 0

            record = {"step": step, "warmup": warmup, "total": value}
            if breakdown is not None:
                record.update(breakdown.detached())
            curve.write(json.dumps(record) + "\n")

            if (step + 1) % cfg.eval_every == 0 or step + 1 == cfg.steps:
                curve.flush()
                stats = {
                    "step": step + 1,
                    "train_total": value,
                    "train_total_ma20": statistics.fmean(recent[-20:]),
                }
                if not warmup:
                    stats.update(evaluate_clip(codec, dataset.eval_clip(), cfg))
                final_stats = stats
                if log is not None:
                    log(stats)
                if stop_when is not None and stop_when(stats):
                    stopped_early = True
                    break

    codec.invalidate_tables()
    codec.eval()
    codec.save(checkpoint, extra={"train_config": json.loads(cfg.to_json()), "stats": final_stats})
    return TrainResult(
        checkpoint=checkpoint,
        steps_run=steps_run,
        stopped_early=stopped_early,
        curve=curve_path,
        final=final_stats,
    )

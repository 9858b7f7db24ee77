"""Training configuration with JSON round-trip.

Rate points: lambda2 in {256, 512, 1024, 2048} for the MSE objective and
{4, 8, 16, 32, 64} for MS-SSIM; lambda1 defaults to 0.01 * lambda2 and an
explicit value is recorded as an override.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from cnfv.codec import CodecConfig
from cnfv.errors import InvalidInput

PSNR_LAMBDAS = (256.0, 512.0, 1024.0, 2048.0)
MSSSIM_LAMBDAS = (4.0, 8.0, 16.0, 32.0, 64.0)


def lambda_schedule(distortion: str) -> tuple[float, ...]:
    if distortion == "mse":
        return PSNR_LAMBDAS
    if distortion == "msssim":
        return MSSSIM_LAMBDAS
    raise InvalidInput(f"unknown distortion objective {distortion!r}")


@dataclass
class TrainConfig:
    codec: CodecConfig = field(default_factory=CodecConfig)
    lambda2: float = 2048.0
    lambda1: float | None = None
    distortion: str = "mse"
    learning_rate: float = 1e-4
    batch_size: int = 32
    crop_size: int = 256
    clip_frames: int = 5
    steps: int = 100000
    warmup_fraction: float = 0.05
    seed: int = 0
    data: str = "synthetic"
    grad_clip: float = 5.0
    eval_every: int = 100

    def __post_init__(self) -> None:
        lambda_schedule(self.distortion)
        if self.clip_frames < 5:
            raise InvalidInput("training clips need at least 5 frames")
        if self.crop_size % 64:
            raise InvalidInput("crop_size must be a multiple of 64")

    @property
    def effective_lambda1(self) -> float:
        return 0.01 * self.lambda2 if self.lambda1 is None else self.lambda1

    @property
    def lambda1_overridden(self) -> bool:
        return self.lambda1 is not None

    @property
    def warmup_steps(self) -> int:
        return int(round(self.steps * self.warmup_fraction))

    @classmethod
    def desk_preset(cls, **overrides) -> "TrainConfig":
        """Single-machine scale: 48 channels, batch 8, 128-pixel crops."""
        base = dict(
            codec=CodecConfig(channels=48),
            batch_size=8,
            crop_size=128,
            clip_frames=5,
            steps=20000,
        )
        base.update(overrides)
        return cls(**base)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        return cls.from_json(Path(path).read_text())

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"bad training config JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidInput("training config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise InvalidInput(f"unknown training config keys: {sorted(unknown)}")
        codec_raw = raw.pop("codec", {})
        codec_known = set(CodecConfig.__dataclass_fields__)
        codec_unknown = set(codec_raw) - codec_known
        if codec_unknown:
            raise InvalidInput(f"unknown codec config keys: {sorted(codec_unknown)}")
        return cls(codec=CodecConfig(**codec_raw).validate(), **raw)

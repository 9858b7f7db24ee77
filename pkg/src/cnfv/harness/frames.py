"""Frame I/O and hashing for the harness."""

import hashlib
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from cnfv.errors import InvalidInput


def load_png_tensor(path: str | Path) -> torch.Tensor:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr.transpose(2, 0, 1))


def save_png(path: str | Path, frame: torch.Tensor) -> None:
    if frame.dim() != 3 or frame.shape[0] != 3:
        raise InvalidInput(f"expected (3, H, W) frame, got {tuple(frame.shape)}")
    arr = torch.clamp(torch.floor(frame * 255.0 + 0.5), 0, 255).to(torch.uint8)
    Image.fromarray(arr.numpy().transpose(1, 2, 0)).save(path)


def load_frame_dir(path: str | Path, limit: int | None = None) -> list[torch.Tensor]:
    """All *.png under `path` in name order, as [0,1] float tensors."""
    path = Path(path)
    if not path.is_dir():
        raise InvalidInput(f"{path} is not a directory")
    files = sorted(path.glob("*.png"))
    if limit is not None:
        files = files[:limit]
    if not files:
        raise InvalidInput(f"no PNG frames under {path}")
    frames = [load_png_tensor(f) for f in files]
    first = frames[0].shape
    for f, t in zip(files, frames):
        if t.shape != first:
            raise InvalidInput(f"{f}: frame size {tuple(t.shape)} differs from {tuple(first)}")
    return frames


def save_frame_dir(path: str | Path, frames: list[torch.Tensor]) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        save_png(path / f"{i:06d}.png", frame)


def hash_frames(frames: list[torch.Tensor]) -> str:
    """SHA-256 over the float32 bytes of all frames, for closed-loop checks."""
    digest = hashlib.sha256()
    for frame in frames:
        digest.update(np.ascontiguousarray(frame.numpy(), dtype=np.float32).tobytes())
    return digest.hexdigest()

"""Clip sources: synthetic motion clips and Vimeo-style septuplet folders.

Synthetic clips come with exact ground-truth backward flow (output pixel p
samples the previous frame at p + f(p)), which makes them usable both for
training smoke runs and for oracle checks of the warping convention.
"""

import warnings
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from scipy.ndimage import gaussian_filter, map_coordinates

from cnfv.errors import InvalidInput


def _smooth_texture(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """(3, h, w) texture in [0,1] with detail at two octaves."""
    base = gaussian_filter(rng.standard_normal((h, w)), 6.0)
    out = np.empty((3, h, w), dtype=np.float64)
    for c in range(3):
        fine = gaussian_filter(rng.standard_normal((h, w)), 1.5)
        mix = 0.6 * base + 0.8 * fine
        lo, hi = mix.min(), mix.max()
        out[c] = 0.08 + 0.84 * (mix - lo) / max(hi - lo, 1e-9)
    return out


def _sample_window(texture: np.ndarray, y0: float, x0: float, h: int, w: int) -> np.ndarray:
    ys = y0 + np.arange(h, dtype=np.float64)
    xs = x0 + np.arange(w, dtype=np.float64)
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    coords = np.stack([gy.ravel(), gx.ravel()])
    planes = [
        map_coordinates(texture[c], coords, order=1, mode="nearest").reshape(h, w)
        for c in range(texture.shape[0])
    ]
    return np.stack(planes)


class SyntheticClips:
    """Deterministic clips with known flow: pans, accelerating pans, movers.

    Every clip is `frames` frames of `size` x `size`; `flows[t]` maps frame
    t to frame t+1 (so warp(frames[t], flows[t]) ~ frames[t+1] away from
    occlusions).
    """

    KINDS = ("pan", "accel", "rects")

    def __init__(
        self,
        n_clips: int = 8,
        frames: int = 5,
        size: int = 128,
        seed: int = 0,
        kinds: tuple[str, ...] = KINDS,
        max_speed: float = 3.0,
    ):
        if size % 4:
            raise InvalidInput("synthetic clip size must be a multiple of 4")
        unknown = set(kinds) - set(self.KINDS)
        if unknown:
            raise InvalidInput(f"unknown synthetic clip kinds: {sorted(unknown)}")
        self.clips: list[dict] = []
        rng = np.random.default_rng(seed)
        for i in range(n_clips):
            kind = kinds[i % len(kinds)]
            self.clips.append(self._make_clip(rng, kind, frames, size, max_speed))

    @staticmethod
    def _make_clip(
        rng: np.random.Generator, kind: str, frames: int, size: int, max_speed: float
    ) -> dict:
        margin = int(np.ceil(max_speed * frames + 0.4 * frames ** 2 / 2)) + 4
        tex = _smooth_texture(rng, size + 2 * margin, size + 2 * margin)
        v = rng.uniform(-max_speed, max_speed, size=2)
        a = rng.uniform(-0.4, 0.4, size=2) if kind == "accel" else np.zeros(2)
        origins = [
            np.array([margin, margin], dtype=np.float64)
            + v * t + 0.5 * a * t * t
            for t in range(frames)
        ]
        imgs = [_sample_window(tex, o[0], o[1], size, size) for o in origins]
        flows = []
        for t in range(frames - 1):
            step = origins[t + 1] - origins[t]
            f = np.empty((2, size, size), dtype=np.float64)
            f[0] = step[1]
            f[1] = step[0]
            flows.append(f)
        if kind == "rects":
            imgs, flows = SyntheticClips._add_movers(rng, imgs, flows, size)
        return {
            "kind": kind,
            "frames": torch.from_numpy(np.stack(imgs).astype(np.float32)),
            "flows": torch.from_numpy(np.stack(flows).astype(np.float32)),
        }

    @staticmethod
    def _add_movers(rng, imgs, flows, size):
        n_rects = int(rng.integers(2, 4))
        for _ in range(n_rects):
            rh, rw = rng.integers(size // 8, size // 3, size=2)
            ry, rx = rng.uniform(0, size - rh), rng.uniform(0, size - rw)
            rv = rng.uniform(-2.5, 2.5, size=2)
            color = rng.uniform(0.1, 0.9, size=3)
            for t in range(len(imgs)):
                y = int(round(ry + rv[0] * t))
                x = int(round(rx + rv[1] * t))
                y0, y1 = max(y, 0), min(y + rh, size)
                x0, x1 = max(x, 0), min(x + rw, size)
                if y0 >= y1 or x0 >= x1:
                    continue
                for c in range(3):
                    imgs[t][c, y0:y1, x0:x1] = color[c]
                if t < len(flows):
                    flows[t][0, y0:y1, x0:x1] = rv[1]
                    flows[t][1, y0:y1, x0:x1] = rv[0]
        return imgs, flows

    def __len__(self) -> int:
        return len(self.clips)

    def __getitem__(self, idx: int) -> dict:
        return self.clips[idx]

    def batch(self, batch_size: int, rng: np.random.Generator) -> torch.Tensor:
        """(B, T, 3, H, W) stack of randomly chosen clips."""
        idx = rng.integers(0, len(self.clips), size=batch_size)
        return torch.stack([self.clips[i]["frames"] for i in idx])

    def eval_clip(self) -> torch.Tensor:
        return self.clips[0]["frames"].unsqueeze(0)


def load_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)


class VimeoSeptuplets:
    """Septuplet folders (im1.png .. im7.png) under root/sequences/<a>/<b>.

    Sequences listed in the list file but missing on disk are skipped with
    a warning; an empty result is an error.
    """

    def __init__(
        self,
        root: str | Path,
        list_file: str = "sep_trainlist.txt",
        crop: int = 256,
        frames: int = 5,
    ):
        self.root = Path(root)
        self.crop = crop
        self.frames = frames
        list_path = self.root / list_file
        if not list_path.exists():
            raise InvalidInput(f"missing sequence list {list_path}")
        self.sequences: list[Path] = []
        for line in list_path.read_text().splitlines():
            name = line.strip()
            if not name:
                continue
            seq = self.root / "sequences" / name
            if not all((seq / f"im{i}.png").exists() for i in range(1, 8)):
                warnings.warn(f"skipping incomplete sequence {name}")
                continue
            self.sequences.append(seq)
        if not self.sequences:
            raise InvalidInput(f"no usable sequences under {self.root}")

    def __len__(self) -> int:
        return len(self.sequences)

    def clip(self, idx: int, rng: np.random.Generator) -> torch.Tensor:
        """(frames, 3, crop, crop) random spatial crop and temporal window."""
        seq = self.sequences[idx]
        start = int(rng.integers(1, 7 - self.frames + 2))
        imgs = [load_png(seq / f"im{start + t}.png") for t in range(self.frames)]
        h, w = imgs[0].shape[1:]
        if h < self.crop or w < self.crop:
            raise InvalidInput(
                f"{seq}: frames {h}x{w} smaller than crop {self.crop}"
            )
        y = int(rng.integers(0, h - self.crop + 1))
        x = int(rng.integers(0, w - self.crop + 1))
        stack = np.stack([im[:, y:y + self.crop, x:x + self.crop] for im in imgs])
        return torch.from_numpy(stack)

    def batch(self, batch_size: int, rng: np.random.Generator) -> torch.Tensor:
        idx = rng.integers(0, len(self.sequences), size=batch_size)
        return torch.stack([self.clip(int(i), rng) for i in idx])

    def eval_clip(self) -> torch.Tensor:
        return self.clip(0, np.random.default_rng(0)).unsqueeze(0)


def open_dataset(spec: str, cfg) -> object:
    """Dataset factory from a config string: 'synthetic[:n]' or 'vimeo:<root>'."""
    if spec.startswith("synthetic"):
        n = int(spec.split(":", 1)[1]) if ":" in spec else 32
        return SyntheticClips(
            n_clips=n, frames=cfg.clip_frames, size=cfg.crop_size, seed=cfg.seed
        )
    if spec.startswith("vimeo:"):
        return VimeoSeptuplets(
            spec.split(":", 1)[1], crop=cfg.crop_size, frames=cfg.clip_frames
        )
    raise InvalidInput(f"unknown dataset spec {spec!r}")

"""Intra-frame codecs for GOP leaders.

The default stores raw 8-bit RGB planes: zero loss beyond 8-bit rounding,
honestly counted at 24 bpp.  An external command can be substituted with
"external:<cmd>"; it is invoked as `<cmd> encode <in.png> <out.bin>` and
`<cmd> decode <in.bin> <out.png>` and must round-trip through PNG.
"""

import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np
import torch

from cnfv.errors import ConfigError, InvalidInput, TruncatedStream
from cnfv.harness.container import INTRA_KIND_EXTERNAL, INTRA_KIND_LOSSLESS


def _check_frame(frame: torch.Tensor) -> torch.Tensor:
    if frame.dim() != 3 or frame.shape[0] != 3:
        raise InvalidInput(f"intra codec expects a (3, H, W) frame, got {tuple(frame.shape)}")
    return frame


class LosslessIntra:
    kind = INTRA_KIND_LOSSLESS

    def encode(self, frame: torch.Tensor) -> bytes:
        frame = _check_frame(frame)
        planes = torch.clamp(torch.floor(frame * 255.0 + 0.5), 0, 255).to(torch.uint8)
        return planes.numpy().tobytes()

    def decode(self, payload: bytes, height: int, width: int) -> torch.Tensor:
        expected = 3 * height * width
        if len(payload) != expected:
            raise TruncatedStream(
                f"intra payload holds {len(payload)} bytes, expected {expected}"
            )
        planes = np.frombuffer(payload, dtype=np.uint8).reshape(3, height, width)
        return torch.from_numpy(planes.astype(np.float32) / 255.0)


class ExternalIntra:
    kind = INTRA_KIND_EXTERNAL

    def __init__(self, command: str):
        if not command:
            raise ConfigError("external intra codec needs a command")
        self.command = command

    def _run(self, mode: str, src: Path, dst: Path) -> None:
        argv = shlex.split(self.command) + [mode, str(src), str(dst)]
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=120)
        except FileNotFoundError as exc:
            raise ConfigError(f"intra codec command not found: {argv[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise ConfigError(f"intra codec timed out: {self.command}") from exc
        if proc.returncode != 0 or not dst.exists():
            raise ConfigError(
                f"intra codec failed ({mode}, rc={proc.returncode}): "
                f"{proc.stderr.decode(errors='replace')[:500]}"
            )

    def encode(self, frame: torch.Tensor) -> bytes:
        from cnfv.harness.frames import save_png

        frame = _check_frame(frame)
        with tempfile.TemporaryDirectory() as tmp:
            src = Path(tmp) / "in.png"
            dst = Path(tmp) / "out.bin"
            save_png(src, frame)
            self._run("encode", src, dst)
            return dst.read_bytes()

    def decode(self, payload: bytes, height: int, width: int) -> torch.Tensor:
        from cnfv.harness.frames import load_png_tensor

        with tempfile.TemporaryDirectory() as tmp:
            src = Path(tmp) / "in.bin"
            dst = Path(tmp) / "out.png"
            src.write_bytes(payload)
            self._run("decode", src, dst)
            frame = load_png_tensor(dst)
        if frame.shape[-2:] != (height, width):
            raise ConfigError(
                f"intra codec returned {tuple(frame.shape[-2:])}, expected {(height, width)}"
            )
        return frame


def make_intra_codec(spec: str):
    """'lossless' or 'external:<command>'."""
    if spec == "lossless":
        return LosslessIntra()
    if spec.startswith("external:"):
        return ExternalIntra(spec[len("external:"):])
    raise ConfigError(f"unknown intra codec {spec!r}")


def intra_codec_for_kind(kind: int, spec: str):
    codec = make_intra_codec(spec)
    if codec.kind != kind:
        raise ConfigError(
            f"bitstream was written with intra kind {kind}, but {spec!r} has kind {codec.kind}"
        )
    return codec

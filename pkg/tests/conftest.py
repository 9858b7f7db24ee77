"""Shared helpers: small perturbed models and deterministic toy sequences.

Fresh models are exactly the identity map (zero-initialized heads), which
makes every latent zero; tests that need non-trivial latents perturb the
weights with a seeded draw first.
"""

import torch
from hypothesis import settings

from cnfv.codec import CodecConfig, VideoCodec
from cnfv.training.data import SyntheticClips

torch.manual_seed(0)
settings.register_profile("slow-box", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("slow-box")

ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    """One verdict line per acceptance criterion, echoed in the run summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def perturb_(module: torch.nn.Module, scale: float = 0.02, seed: int = 0) -> None:
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in module.parameters():
            p.add_(scale * torch.randn(p.shape, generator=g))


def tiny_codec(channels: int = 16, perturb: float = 0.02, seed: int = 1,
               **overrides) -> VideoCodec:
    codec = VideoCodec(CodecConfig(channels=channels, **overrides).validate())
    if perturb:
        perturb_(codec, perturb, seed)
        codec.invalidate_tables()
    codec.eval()
    return codec


def toy_frames(n: int, size: int = 64, seed: int = 0, chunk: int = 10) -> list[torch.Tensor]:
    """n moving-texture frames of (3, size, size) in [0, 1].

    Long sequences are several independent short clips back to back, so
    they contain scene cuts as well as smooth motion.
    """
    n_clips = -(-n // chunk)
    data = SyntheticClips(n_clips=n_clips, frames=chunk, size=size, seed=seed)
    frames = [c for i in range(n_clips) for c in data[i]["frames"]]
    return frames[:n]

"""Motion branch: flow estimation, coding, extrapolation and compensation.

Flow convention: a flow field f for frame t satisfies warp(ref, f) ~ x_t,
i.e. output pixel p samples the reference at p + f(p); channel 0 is the
horizontal displacement, channel 1 the vertical one, in pixels.
"""

import struct
from collections import deque
from pathlib import Path
from typing import Protocol

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from cnfv.canf_core.backbone import CanfCoder, CanfResult
from cnfv.canf_core.nets import UNet, conv, zero_init_
from cnfv.canf_core.quantizer import QuantizerMode
from cnfv.errors import ConfigError, InvalidInput

FLO_MAGIC = b"FLO\x00"


def warp(frame: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
    """Backward-warp `frame` by `flow` with bilinear sampling.

    Border padding keeps out-of-frame samples finite; align_corners=True so
    integer flows land exactly on pixel centers.
    """
    if frame.dim() != 4 or flow.dim() != 4 or flow.shape[1] != 2:
        raise InvalidInput(
            f"warp expects (N,C,H,W) frame and (N,2,H,W) flow, got "
            f"{tuple(frame.shape)} and {tuple(flow.shape)}"
        )
    if frame.shape[0] != flow.shape[0] or frame.shape[-2:] != flow.shape[-2:]:
        raise InvalidInput(
            f"frame {tuple(frame.shape)} and flow {tuple(flow.shape)} do not align"
        )
    n, _, h, w = flow.shape
    ys = torch.arange(h, dtype=frame.dtype, device=frame.device)
    xs = torch.arange(w, dtype=frame.dtype, device=frame.device)
    grid_y, grid_x = torch.meshgrid(ys, xs, indexing="ij")
    sample_x = grid_x.unsqueeze(0) + flow[:, 0]
    sample_y = grid_y.unsqueeze(0) + flow[:, 1]
    norm_x = 2.0 * sample_x / max(w - 1, 1) - 1.0
    norm_y = 2.0 * sample_y / max(h - 1, 1) - 1.0
    grid = torch.stack([norm_x, norm_y], dim=-1)
    return F.grid_sample(
        frame, grid, mode="bilinear", padding_mode="border", align_corners=True
    )


def read_flow_file(path: str | Path) -> np.ndarray:
    """Read a planar float32 flow file; returns (2, H, W)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != FLO_MAGIC:
        raise InvalidInput(f"{path}: not a flow file")
    w, h = struct.unpack_from("<II", raw, 4)
    expected = 12 + 2 * h * w * 4
    if len(raw) != expected:
        raise InvalidInput(f"{path}: expected {expected} bytes for {w}x{h}, got {len(raw)}")
    planes = np.frombuffer(raw, dtype="<f4", offset=12).reshape(2, h, w)
    return planes.copy()


def write_flow_file(path: str | Path, flow: np.ndarray) -> None:
    flow = np.asarray(flow, dtype=np.float32)
    if flow.ndim != 3 or flow.shape[0] != 2:
        raise InvalidInput(f"flow must be (2, H, W), got {flow.shape}")
    h, w = flow.shape[1:]
    with open(path, "wb") as f:
        f.write(FLO_MAGIC)
        f.write(struct.pack("<II", w, h))
        f.write(flow.astype("<f4").tobytes())


class FlowSource(Protocol):
    def estimate(
        self, target: torch.Tensor, reference: torch.Tensor, frame_index: int | None = None
    ) -> torch.Tensor: ...


class PyramidFlowNet(nn.Module):
    """Small coarse-to-fine flow estimator, trained jointly with the codec.

    Each level refines an upsampled flow with a residual predicted from the
    warped reference; zero-initialized heads start the whole cascade at
    zero flow.
    """

    def __init__(self, levels: int = 3, width: int = 24):
        super().__init__()
        self.levels = levels
        self.nets = nn.ModuleList()
        for _ in range(levels):
            net = nn.Sequential(
                conv(8, width, 5, 1),
                nn.ReLU(inplace=True),
                conv(width, width, 5, 1),
                nn.ReLU(inplace=True),
                conv(width, width, 3, 1),
                nn.ReLU(inplace=True),
                conv(width, 2, 3, 1),
            )
            zero_init_(net[-1])
            self.nets.append(net)

    def estimate(
        self, target: torch.Tensor, reference: torch.Tensor, frame_index: int | None = None
    ) -> torch.Tensor:
        scale = 2 ** (self.levels - 1)
        if target.shape[-1] % scale or target.shape[-2] % scale:
            raise InvalidInput(
                f"frame size {tuple(target.shape[-2:])} not divisible by {scale}"
            )
        targets = [target]
        refs = [reference]
        for _ in range(self.levels - 1):
            targets.append(F.avg_pool2d(targets[-1], 2))
            refs.append(F.avg_pool2d(refs[-1], 2))
        flow = torch.zeros(
            target.shape[0], 2, *targets[-1].shape[-2:],
            dtype=target.dtype, device=target.device,
        )
        for lvl in range(self.levels - 1, -1, -1):
            if lvl < self.levels - 1:
                flow = 2.0 * F.interpolate(
                    flow, scale_factor=2, mode="bilinear", align_corners=False
                )
            warped = warp(refs[lvl], flow)
            flow = flow + self.nets[lvl](torch.cat([targets[lvl], warped, flow], dim=1))
        return flow

    forward = estimate


class PrecomputedFlowSource:
    """Reads flows from numbered files instead of estimating them.

    `pattern` must contain a %d-style slot for the frame index, e.g.
    "flows/%06d.flo".
    """

    def __init__(self, pattern: str):
        self.pattern = pattern

    def estimate(
        self, target: torch.Tensor, reference: torch.Tensor, frame_index: int | None = None
    ) -> torch.Tensor:
        if frame_index is None:
            raise ConfigError("precomputed flow source needs a frame index")
        path = Path(self.pattern % frame_index)
        if not path.exists():
            raise ConfigError(f"flow file {path} not found")
        flow = torch.from_numpy(read_flow_file(path)).unsqueeze(0)
        flow = flow.to(dtype=target.dtype, device=target.device)
        if flow.shape[-2:] != target.shape[-2:]:
            raise InvalidInput(
                f"flow {tuple(flow.shape[-2:])} does not match frame "
                f"{tuple(target.shape[-2:])}"
            )
        return flow


class ReferenceBuffer:
    """Sliding decoded-frame/flow history shared by encoder and decoder.

    Holds up to 3 frames and 2 flows, newest last.  Intra frames reset the
    buffer so no motion history leaks across a GOP boundary.
    """

    def __init__(self) -> None:
        self._frames: deque[torch.Tensor] = deque(maxlen=3)
        self._flows: deque[torch.Tensor] = deque(maxlen=2)

    def reset(self) -> None:
        self._frames.clear()
        self._flows.clear()

    def push_intra(self, frame: torch.Tensor) -> None:
        self.reset()
        self._frames.append(frame)

    def push(self, frame: torch.Tensor, flow: torch.Tensor) -> None:
        if not self._frames:
            raise InvalidInput("cannot push a P-frame into an empty buffer")
        self._frames.append(frame)
        self._flows.append(flow)

    @property
    def last_frame(self) -> torch.Tensor:
        if not self._frames:
            raise InvalidInput("reference buffer is empty")
        return self._frames[-1]

    @property
    def last_flow(self) -> torch.Tensor | None:
        return self._flows[-1] if self._flows else None

    @property
    def full(self) -> bool:
        return len(self._frames) == 3 and len(self._flows) == 2

    def history(self) -> tuple[list[torch.Tensor], list[torch.Tensor]]:
        return list(self._frames), list(self._flows)


class FlowExtrapolator(nn.Module):
    """Predicts the next flow from 3 decoded frames and 2 decoded flows."""

    def __init__(self, base: int = 16):
        super().__init__()
        self.net = UNet(3 * 3 + 2 * 2, 2, base=base)

    def forward(self, buffer: ReferenceBuffer) -> torch.Tensor:
        frames, flows = buffer.history()
        if len(frames) < 3 or len(flows) < 2:
            raise InvalidInput("extrapolation needs a full reference buffer")
        return self.net(torch.cat([*frames, *flows], dim=1))


class MotionCompensator(nn.Module):
    """warp + residual refinement, clamped to the frame range."""

    def __init__(self, base: int = 16):
        super().__init__()
        self.refine = UNet(3 + 3 + 2, 3, base=base)

    def forward(
        self, reference: torch.Tensor, flow: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        warped = warp(reference, flow)
        refined = warped + self.refine(torch.cat([warped, reference, flow], dim=1))
        return refined.clamp(0.0, 1.0), warped


class MotionCoder(nn.Module):
    """Augmented coder over 2-channel flow lanes.

    `mode` "conditional" codes f_t given the condition flow; "residual"
    codes f_t - f_c with an unconditioned coder.  `conditioned=False`
    (condition source "none") makes the conditional mode an intra flow
    coder.  The temporal prior, when enabled, sees the extrapolated frame.
    """

    def __init__(
        self,
        channels: int,
        steps: int = 2,
        mode: str = "conditional",
        conditioned: bool = True,
        temporal_prior: bool = True,
    ):
        super().__init__()
        if mode not in ("conditional", "residual"):
            raise InvalidInput(f"unknown motion coding mode {mode!r}")
        self.mode = mode
        self.conditioned = conditioned and mode == "conditional"
        self.coder = CanfCoder(
            data_ch=2,
            cond_ch=2 if self.conditioned else 0,
            channels=channels,
            steps=steps,
            temporal_ch=3 if temporal_prior else 0,
        )

    def encode(
        self,
        flow: torch.Tensor,
        condition_flow: torch.Tensor,
        extrapolated_frame: torch.Tensor | None,
        mode: QuantizerMode,
        generator: torch.Generator | None = None,
    ) -> tuple[torch.Tensor, CanfResult]:
        """Returns (decoded flow, coding result)."""
        if self.mode == "residual":
            result = self.coder.encode(
                flow - condition_flow, None, extrapolated_frame, mode, generator=generator
            )
            return condition_flow + result.recon, result
        cond = condition_flow if self.conditioned else None
        result = self.coder.encode(flow, cond, extrapolated_frame, mode, generator=generator)
        return result.recon, result

    def decode(
        self,
        z_sym: torch.Tensor,
        h_sym: torch.Tensor,
        condition_flow: torch.Tensor,
        extrapolated_frame: torch.Tensor | None,
    ) -> torch.Tensor:
        if self.mode == "residual":
            residual = self.coder.decode(z_sym, h_sym, None, extrapolated_frame)
            return condition_flow + residual
        cond = condition_flow if self.conditioned else None
        return self.coder.decode(z_sym, h_sym, cond, extrapolated_frame)

    @property
    def prior(self):
        return self.coder.prior

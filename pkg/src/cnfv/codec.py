"""Full P-frame codec: motion branch + inter branch under one manifest.

The manifest is the canonical JSON description of everything a decoder
must replicate (channels, coupling steps, coding modes, constants); its
SHA-256 travels in every bitstream header and gates decoding.
"""

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
import torch.nn as nn
import torch.nn.functional as F

from cnfv.canf_core.backbone import CanfResult
from cnfv.canf_core.rates import SIGMA_MIN
from cnfv.coder.latent_codec import decode_latents, encode_latents
from cnfv.coder.model_tables import build_table_set
from cnfv.coder.range_coder import BitChunk
from cnfv.errors import ConfigError, InvalidInput
from cnfv.inter_coder import InterFrameCoder
from cnfv.motion_coder import (
    FlowExtrapolator,
    MotionCoder,
    MotionCompensator,
    PrecomputedFlowSource,
    PyramidFlowNet,
    ReferenceBuffer,
    warp,
)
from cnfv.canf_core.quantizer import QuantizerMode

FORMAT_VERSION = 1
PAD_MULTIPLE = 64

INTER_MODES = ("conditional", "residual")
MOTION_MODES = ("conditional", "residual")
MOTION_CONDITIONS = ("extrapolated", "previous", "none")


@dataclass
class CodecConfig:
    """Architecture and coding-mode switches; every ablation axis lives here."""

    channels: int = 128
    coupling_steps: int = 2
    inter_mode: str = "conditional"
    motion_mode: str = "conditional"
    motion_condition: str = "extrapolated"
    temporal_prior: bool = True
    flow_source: str = "pyramid"

    def validate(self) -> "CodecConfig":
        if self.inter_mode not in INTER_MODES:
            raise InvalidInput(f"inter_mode must be one of {INTER_MODES}")
        if self.motion_mode not in MOTION_MODES:
            raise InvalidInput(f"motion_mode must be one of {MOTION_MODES}")
        if self.motion_condition not in MOTION_CONDITIONS:
            raise InvalidInput(f"motion_condition must be one of {MOTION_CONDITIONS}")
        if self.coupling_steps not in (1, 2, 3):
            raise InvalidInput("coupling_steps must be 1, 2 or 3")
        if self.channels < 1:
            raise InvalidInput("channels must be positive")
        if self.flow_source != "pyramid" and not self.flow_source.startswith("files:"):
            raise InvalidInput("flow_source must be 'pyramid' or 'files:<pattern>'")
        return self


@dataclass
class PFrameResult:
    """Everything one P-frame coding pass yields (training or test).

    `inter` is None for motion-only (warmup) passes, where x_hat is just
    the compensated frame.
    """

    x_hat: torch.Tensor
    f_hat: torch.Tensor
    f_t: torch.Tensor
    f_c: torch.Tensor
    x_c: torch.Tensor
    x_warp: torch.Tensor
    inter: CanfResult | None
    motion: CanfResult

    @property
    def motion_bits(self) -> torch.Tensor:
        return self.motion.rate_z_bits + self.motion.rate_h_bits

    @property
    def total_bits(self) -> torch.Tensor:
        bits = self.motion_bits
        if self.inter is not None:
            bits = bits + self.inter.rate_z_bits + self.inter.rate_h_bits
        return bits


def pad_frame(x: torch.Tensor, multiple: int = PAD_MULTIPLE) -> torch.Tensor:
    """Replicate-pad bottom/right to the coding grid."""
    h, w = x.shape[-2:]
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph == 0 and pw == 0:
        return x
    return F.pad(x, (0, pw, 0, ph), mode="replicate")


class VideoCodec(nn.Module):
    def __init__(self, config: CodecConfig):
        super().__init__()
        config.validate()
        self.config = config
        c = config.channels
        self.inter = InterFrameCoder(
            c, config.coupling_steps, config.inter_mode, config.temporal_prior
        )
        self.motion = MotionCoder(
            c,
            config.coupling_steps,
            config.motion_mode,
            conditioned=config.motion_condition != "none",
            temporal_prior=config.temporal_prior,
        )
        self.flow_net = PyramidFlowNet() if config.flow_source == "pyramid" else None
        self.extrapolator = FlowExtrapolator()
        self.compensator = MotionCompensator()
        self._tables = None

    @property
    def flow_source(self):
        if self.flow_net is not None:
            return self.flow_net
        return PrecomputedFlowSource(self.config.flow_source[len("files:"):])

    def condition_flow(self, buffer: ReferenceBuffer) -> torch.Tensor:
        """The motion condition f_c under the configured source, with fallback.

        Until the buffer holds 3 frames and 2 flows (or 1 flow for the
        "previous" source) the condition falls back to zero flow.
        """
        ref = buffer.last_frame
        zero = torch.zeros(
            ref.shape[0], 2, *ref.shape[-2:], dtype=ref.dtype, device=ref.device
        )
        kind = self.config.motion_condition
        if kind == "none":
            return zero
        if kind == "previous":
            return buffer.last_flow if buffer.last_flow is not None else zero
        return self.extrapolator(buffer) if buffer.full else zero

    def code_pframe(
        self,
        x_t: torch.Tensor,
        buffer: ReferenceBuffer,
        mode: QuantizerMode,
        frame_index: int | None = None,
        generator: torch.Generator | None = None,
        run_inter: bool = True,
    ) -> PFrameResult:
        """One full coding pass; test mode also clamps the reconstruction."""
        mode = QuantizerMode(mode)
        ref = buffer.last_frame
        if x_t.shape != ref.shape:
            raise InvalidInput(
                f"frame {tuple(x_t.shape)} does not match reference {tuple(ref.shape)}"
            )
        if x_t.shape[-1] % PAD_MULTIPLE or x_t.shape[-2] % PAD_MULTIPLE:
            raise InvalidInput(
                f"frames must be padded to multiples of {PAD_MULTIPLE}, "
                f"got {tuple(x_t.shape[-2:])}"
            )
        f_t = self.flow_source.estimate(x_t, ref, frame_index)
        f_c = self.condition_flow(buffer)
        x_ext = warp(ref, f_c) if self.config.temporal_prior else None
        f_hat, m_res = self.motion.encode(f_t, f_c, x_ext, mode, generator)
        x_c, x_warp = self.compensator(ref, f_hat)
        if run_inter:
            x_hat, i_res = self.inter.encode_frame(x_t, x_c, mode, generator)
            if mode is QuantizerMode.TEST_ROUND:
                x_hat = x_hat.clamp(0.0, 1.0)
        else:
            x_hat, i_res = x_c, None
        return PFrameResult(
            x_hat=x_hat, f_hat=f_hat, f_t=f_t, f_c=f_c, x_c=x_c, x_warp=x_warp,
            inter=i_res, motion=m_res,
        )

    # --- bitstream side ---

    def tables(self):
        """(TableSet, ContextLayout) for this model, built once per weights."""
        if self._tables is None:
            self._tables = build_table_set(self.motion.prior, self.inter.prior)
        return self._tables

    def invalidate_tables(self) -> None:
        self._tables = None

    def latent_shapes(self, h: int, w: int) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
        c = self.config.channels
        return (c, h // 16, w // 16), (c, h // 64, w // 64)

    def encode_pframe(
        self, x_t: torch.Tensor, buffer: ReferenceBuffer, frame_index: int | None = None
    ) -> tuple[BitChunk, BitChunk, PFrameResult]:
        table_set, layout = self.tables()
        result = self.code_pframe(x_t, buffer, QuantizerMode.TEST_ROUND, frame_index)
        motion_chunk = encode_latents(result.motion, layout.band(0), table_set)
        inter_chunk = encode_latents(result.inter, layout.band(1), table_set)
        return motion_chunk, inter_chunk, result

    def decode_pframe(
        self, motion_chunk: BitChunk, inter_chunk: BitChunk, buffer: ReferenceBuffer
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Receiver path; returns (x_hat, f_hat) and leaves buffer untouched."""
        table_set, layout = self.tables()
        ref = buffer.last_frame
        h, w = ref.shape[-2:]
        z_shape, h_shape = self.latent_shapes(h, w)
        f_c = self.condition_flow(buffer)
        x_ext = warp(ref, f_c) if self.config.temporal_prior else None
        mz, mh = decode_latents(
            motion_chunk, self.motion.coder, table_set, layout.band(0),
            z_shape, h_shape, x_ext,
        )
        f_hat = self.motion.decode(mz, mh, f_c, x_ext)
        x_c, _ = self.compensator(ref, f_hat)
        temporal = x_c if self.config.temporal_prior else None
        iz, ih = decode_latents(
            inter_chunk, self.inter.coder, table_set, layout.band(1),
            z_shape, h_shape, temporal,
        )
        x_hat = self.inter.decode_frame(iz, ih, x_c).clamp(0.0, 1.0)
        return x_hat, f_hat

    # --- persistence ---

    def manifest(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "sigma_min": SIGMA_MIN,
            "p_floor": 2.0 ** -16,
            "rounding": "half_away_from_zero",
            "pad_multiple": PAD_MULTIPLE,
            **asdict(self.config),
        }

    def manifest_hash(self) -> bytes:
        return manifest_hash(self.manifest())

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        payload = {
            "manifest": self.manifest(),
            "state_dict": self.state_dict(),
            "extra": extra or {},
        }
        torch.save(payload, path)

    @classmethod
    def load(cls, path: str | Path) -> "VideoCodec":
        return load_checkpoint(path)[0]


def manifest_hash(manifest: dict) -> bytes:
    canonical = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).digest()


def load_checkpoint(path: str | Path) -> tuple["VideoCodec", dict]:
    """(codec, extra metadata) from a saved checkpoint."""
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except (RuntimeError, KeyError, EOFError) as exc:
        raise ConfigError(f"{path}: unreadable checkpoint ({exc})") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: not a model checkpoint")
    manifest = payload.get("manifest")
    if manifest is None or manifest.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"{path}: not a model checkpoint of format {FORMAT_VERSION}")
    fields = {k: manifest[k] for k in CodecConfig.__dataclass_fields__}
    codec = VideoCodec(CodecConfig(**fields))
    codec.load_state_dict(payload["state_dict"])
    codec.eval()
    return codec, payload.get("extra", {})

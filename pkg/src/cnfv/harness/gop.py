"""GOP pipeline: sequence encode/decode through the container format.

Frame 0 of every GOP is intra; it resets the reference buffer on both
sides.  bpp accounting divides the total file size (headers included) by
frames * original pixels.  Per-frame records also track the model's own
rate estimate so estimate-vs-stream agreement can be audited.
"""

import io
from dataclasses import dataclass, field
from pathlib import Path

import torch

from cnfv.codec import VideoCodec, pad_frame
from cnfv.errors import DecodeIncompatible, InvalidInput
from cnfv.harness import container
from cnfv.harness.intra import intra_codec_for_kind, make_intra_codec
from cnfv.harness.metrics import ms_ssim_value, psnr_rgb
from cnfv.motion_coder import ReferenceBuffer

RD_CSV_HEADER = "sequence,lambda_index,frames,bpp,psnr_rgb,ms_ssim"


@dataclass
class FrameStats:
    frame_type: str
    stream_bits: int
    estimated_bits: float


@dataclass
class EncodeResult:
    n_frames: int
    width: int
    height: int
    total_bytes: int
    per_frame: list[FrameStats] = field(default_factory=list)
    recon: list[torch.Tensor] = field(default_factory=list)

    @property
    def bpp(self) -> float:
        return 8.0 * self.total_bytes / (self.n_frames * self.width * self.height)


def plan_frame_types(n_frames: int, gop_size: int) -> list[str]:
    if n_frames < 1 or gop_size < 1:
        raise InvalidInput(f"need frames >= 1 and gop >= 1, got {n_frames}, {gop_size}")
    return ["I" if i % gop_size == 0 else "P" for i in range(n_frames)]


def encode_sequence(
    codec: VideoCodec,
    frames: list[torch.Tensor],
    out: io.RawIOBase | io.BufferedIOBase,
    gop_size: int,
    lambda_index: int = 0,
    intra_spec: str = "lossless",
    keep_recon: bool = False,
) -> EncodeResult:
    """Encode frames into `out`; reconstructions mirror the decoder exactly."""
    if not frames:
        raise InvalidInput("no frames to encode")
    intra_codec = make_intra_codec(intra_spec)
    h, w = frames[0].shape[-2:]
    padded = pad_frame(frames[0].unsqueeze(0)).shape
    header = container.ContainerHeader(
        width=w, height=h, padded_width=padded[-1], padded_height=padded[-2],
        gop_size=gop_size, lambda_index=lambda_index,
        intra_kind=intra_codec.kind, manifest_sha=codec.manifest_hash(),
    )
    out.write(header.pack())
    total = header.size
    result = EncodeResult(len(frames), w, h, 0)
    buffer = ReferenceBuffer()
    codec.eval()
    with torch.no_grad():
        for index, frame_type in enumerate(plan_frame_types(len(frames), gop_size)):
            frame = frames[index]
            if frame.shape[-2:] != (h, w):
                raise InvalidInput(f"frame {index} size differs from frame 0")
            if frame_type == "I":
                payload = intra_codec.encode(frame)
                bits = 8 * container.write_intra_record(out, payload)
                recon = intra_codec.decode(payload, h, w)
                buffer.push_intra(pad_frame(recon.unsqueeze(0)))
                result.per_frame.append(FrameStats("I", bits, float(bits)))
            else:
                x_t = pad_frame(frame.unsqueeze(0))
                mchunk, ichunk, coded = codec.encode_pframe(x_t, buffer, frame_index=index)
                bits = 8 * container.write_p_record(out, mchunk, ichunk)
                buffer.push(coded.x_hat, coded.f_hat)
                recon = coded.x_hat[0, :, :h, :w]
                result.per_frame.append(
                    FrameStats("P", bits, float(coded.total_bits))
                )
            total += bits // 8
            if keep_recon:
                result.recon.append(recon.clone())
    result.total_bytes = total
    return result


def decode_sequence(
    codec: VideoCodec,
    stream: io.RawIOBase | io.BufferedIOBase,
    intra_spec: str = "lossless",
    max_frames: int | None = None,
) -> tuple[list[torch.Tensor], container.ContainerHeader]:
    header = container.read_header(stream)
    if header.manifest_sha != codec.manifest_hash():
        raise DecodeIncompatible(
            "bitstream manifest hash does not match this model's configuration"
        )
    intra_codec = intra_codec_for_kind(header.intra_kind, intra_spec)
    h, w = header.height, header.width
    frames: list[torch.Tensor] = []
    buffer = ReferenceBuffer()
    codec.eval()
    with torch.no_grad():
        while max_frames is None or len(frames) < max_frames:
            record = container.read_record(stream)
            if record is None:
                break
            if record[0] == "I":
                recon = intra_codec.decode(record[1], h, w)
                buffer.push_intra(pad_frame(recon.unsqueeze(0)))
                frames.append(recon)
            else:
                x_hat, f_hat = codec.decode_pframe(record[1], record[2], buffer)
                buffer.push(x_hat, f_hat)
                frames.append(x_hat[0, :, :h, :w])
    if not frames:
        raise InvalidInput("bitstream holds no frames")
    return frames, header


@dataclass
class RDRecord:
    sequence: str
    lambda_index: int
    frames: int
    bpp: float
    psnr_rgb: float
    ms_ssim: float

    def csv_row(self) -> str:
        return (
            f"{self.sequence},{self.lambda_index},{self.frames},"
            f"{self.bpp:.6f},{self.psnr_rgb:.4f},{self.ms_ssim:.6f}"
        )


def evaluate_sequence(
    codec: VideoCodec,
    frames: list[torch.Tensor],
    sequence_name: str,
    gop_size: int,
    lambda_index: int,
    intra_spec: str = "lossless",
) -> tuple[RDRecord, EncodeResult]:
    """Full encode -> decode -> metrics round trip, in memory."""
    stream = io.BytesIO()
    enc = encode_sequence(
        codec, frames, stream, gop_size, lambda_index, intra_spec, keep_recon=False
    )
    stream.seek(0)
    recon, _ = decode_sequence(codec, stream, intra_spec)
    psnr = sum(psnr_rgb(r, f) for r, f in zip(recon, frames)) / len(frames)
    msval = sum(ms_ssim_value(r, f) for r, f in zip(recon, frames)) / len(frames)
    record = RDRecord(
        sequence=sequence_name,
        lambda_index=lambda_index,
        frames=len(frames),
        bpp=enc.bpp,
        psnr_rgb=psnr,
        ms_ssim=msval,
    )
    return record, enc


def write_rd_csv(path: str | Path, records: list[RDRecord]) -> None:
    lines = [RD_CSV_HEADER] + [r.csv_row() for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_rd_csv(path: str | Path) -> list[RDRecord]:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != RD_CSV_HEADER:
        raise InvalidInput(f"{path}: missing RD CSV header {RD_CSV_HEADER!r}")
    records = []
    for line in text[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise InvalidInput(f"{path}: malformed row {line!r}")
        records.append(
            RDRecord(
                sequence=parts[0],
                lambda_index=int(parts[1]),
                frames=int(parts[2]),
                bpp=float(parts[3]),
                psnr_rgb=float(parts[4]),
                ms_ssim=float(parts[5]),
            )
        )
    return records

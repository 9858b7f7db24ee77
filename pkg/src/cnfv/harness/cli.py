"""Command line interface.

Exit codes: 0 success, 2 contract violations (bad arguments, incompatible
streams or models), 3 unreadable or truncated inputs.
"""

import argparse
import statistics
import sys
from pathlib import Path

from cnfv.errors import CodecError, TruncatedStream
from cnfv.training.config import TrainConfig, lambda_schedule


def _lambda_index(extra: dict, fallback: int) -> int:
    train_cfg = extra.get("train_config") or {}
    lam = train_cfg.get("lambda2")
    distortion = train_cfg.get("distortion", "mse")
    if lam is None:
        return fallback
    schedule = lambda_schedule(distortion)
    return schedule.index(lam) if lam in schedule else fallback


def cmd_train(args) -> int:
    from cnfv.training.loop import train

    cfg = TrainConfig.from_file(args.config)
    if args.steps is not None:
        cfg.steps = args.steps
    result = train(cfg, args.out, log=lambda s: print(s, flush=True))
    print(f"trained {result.steps_run} steps -> {result.checkpoint}")
    return 0


def cmd_encode(args) -> int:
    from cnfv.codec import load_checkpoint
    from cnfv.harness.frames import hash_frames, load_frame_dir
    from cnfv.harness.gop import encode_sequence

    codec, extra = load_checkpoint(args.model)
    frames = load_frame_dir(args.input, limit=args.frames)
    lam_idx = args.lambda_index
    if lam_idx is None:
        lam_idx = _lambda_index(extra, 0)
    with open(args.out, "wb") as out:
        result = encode_sequence(
            codec, frames, out, args.gop, lam_idx, args.intra, keep_recon=True
        )
    print(
        f"encoded {result.n_frames} frames to {args.out}: "
        f"{result.total_bytes} bytes, {result.bpp:.4f} bpp"
    )
    print(f"recon_hash {hash_frames(result.recon)}")
    return 0


def cmd_decode(args) -> int:
    from cnfv.codec import load_checkpoint
    from cnfv.harness.frames import hash_frames, save_frame_dir
    from cnfv.harness.gop import decode_sequence

    codec, _ = load_checkpoint(args.model)
    with open(args.input, "rb") as stream:
        frames, header = decode_sequence(codec, stream, args.intra, args.frames)
    save_frame_dir(args.out, frames)
    print(f"decoded {len(frames)} frames ({header.width}x{header.height}) to {args.out}")
    print(f"recon_hash {hash_frames(frames)}")
    return 0


def cmd_eval(args) -> int:
    from cnfv.codec import load_checkpoint
    from cnfv.harness.frames import load_frame_dir
    from cnfv.harness.gop import evaluate_sequence, write_rd_csv

    records = []
    for model_idx, model_path in enumerate(args.model):
        codec, extra = load_checkpoint(model_path)
        lam_idx = _lambda_index(extra, model_idx)
        for seq_dir in args.inputs:
            frames = load_frame_dir(seq_dir, limit=args.frames)
            record, _ = evaluate_sequence(
                codec, frames, Path(seq_dir).name, args.gop, lam_idx, args.intra
            )
            records.append(record)
            print(record.csv_row())
    write_rd_csv(args.out, records)
    print(f"wrote {len(records)} rows to {args.out}")
    if args.plot:
        from cnfv.harness.plot import rd_plot

        curves: dict[str, list] = {}
        for r in records:
            curves.setdefault(r.sequence, []).append((r.bpp, r.psnr_rgb))
        rd_plot(curves, "PSNR (RGB, dB)", args.plot)
        print(f"wrote plot to {args.plot}")
    return 0


def cmd_bdrate(args) -> int:
    from cnfv.harness.bdrate import bd_rate_from_csv_rows, curve_from_records
    from cnfv.harness.gop import read_rd_csv

    anchor = read_rd_csv(args.anchor)
    test = read_rd_csv(args.test)
    per_seq = bd_rate_from_csv_rows(anchor, test, args.metric)
    for seq, value in per_seq.items():
        print(f"{seq}: {value:+.2f}%")
    mean = statistics.mean(per_seq.values())
    print(f"mean BD-rate ({args.metric}): {mean:+.2f}%")
    if args.plot:
        from cnfv.harness.plot import rd_plot

        label = "PSNR (RGB, dB)" if args.metric == "psnr" else "MS-SSIM"
        curves: dict[str, list] = {}
        for r in anchor:
            curves.setdefault(f"anchor/{r.sequence}", []).extend(
                curve_from_records([r], args.metric)
            )
        for r in test:
            curves.setdefault(f"test/{r.sequence}", []).extend(
                curve_from_records([r], args.metric)
            )
        rd_plot(curves, label, args.plot)
        print(f"wrote plot to {args.plot}")
    return 0


def cmd_ablate(args) -> int:
    from cnfv.training.ablate import run_ablation

    cfg = TrainConfig.from_file(args.config)
    if args.steps is not None:
        cfg.steps = args.steps
    axes = args.axes.split(",") if args.axes else ["inter", "motion", "steps"]
    report = run_ablation(cfg, axes, args.out)
    for axis, variants in report.items():
        for name, stats in variants.items():
            loss = stats.get("loss")
            shown = "n/a" if loss is None else f"{loss:.4f}"
            print(f"{axis}/{name}: eval loss {shown}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cnfv", description="Conditional-flow video codec tools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode a PNG frame directory")
    p.add_argument("input", help="directory of PNG frames")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gop", type=int, default=12)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--lambda-index", type=int, default=None)
    p.add_argument("--intra", default="lossless")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a bitstream to PNG frames")
    p.add_argument("input", help="bitstream file")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--intra", default="lossless")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="rate-distortion evaluation to CSV")
    p.add_argument("inputs", nargs="+", help="frame directories")
    p.add_argument("--model", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gop", type=int, default=12)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--intra", default="lossless")
    p.add_argument("--plot", default=None, help="optional SVG output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bdrate", help="BD-rate between two RD CSV files")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--metric", choices=("psnr", "msssim"), default="psnr")
    p.add_argument("--plot", default=None, help="optional SVG output")
    p.set_defaults(func=cmd_bdrate)

    p = sub.add_parser("ablate", help="train and compare configuration variants")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--axes", default=None, help="comma list: inter,motion,steps")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TruncatedStream, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

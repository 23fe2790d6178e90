"""Command-line surface: train, score, info, and report.

Exit codes: 0 on success, 1 on runtime failures (I/O, parse, validation),
2 on bad flags (argparse's own convention).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .io import load_model, read_pgm, save_model, write_pgm
from .probimage import backpropagate, compute_sources, layer_image, to_display, total_logprob
from .pyramid import AceConfig, layer_distortions, propagate, train_model

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acetex",
        description="Learn multiscale texture statistics and localize statistical faults.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="learn a model from a texture image")
    train.add_argument("--input", required=True, help="training image (PGM)")
    train.add_argument("--output", required=True, help="where to write the model file")
    train.add_argument("--layers", type=int, default=8)
    train.add_argument("--vq-bits", type=int, default=8)
    train.add_argument("--hist-bits", type=int, default=6)
    train.add_argument("--seed", type=int, default=1)
    train.add_argument("--no-wedge", action="store_true",
                       help="skip illumination plane removal")
    train.set_defaults(func=cmd_train)

    score = sub.add_parser("score", help="score an image and write per-layer images")
    score.add_argument("--model", required=True)
    score.add_argument("--input", required=True, help="image to score (PGM)")
    score.add_argument("--out-dir", required=True)
    score.add_argument("--mode", choices=("anomaly", "probability"), default="anomaly")
    score.add_argument("--combined", action="store_true",
                       help="also write the fully backpropagated image")
    score.set_defaults(func=cmd_score)

    info = sub.add_parser("info", help="describe a model file")
    info.add_argument("--model", required=True)
    info.set_defaults(func=cmd_info)

    report = sub.add_parser("report", help="score an image and render figures plus a CSV summary")
    report.add_argument("--model", required=True)
    report.add_argument("--input", required=True)
    report.add_argument("--out-dir", required=True)
    report.add_argument("--mode", choices=("anomaly", "probability"), default="anomaly")
    report.set_defaults(func=cmd_report)

    return parser


def cmd_train(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    img = read_pgm(Path(args.input).read_bytes())
    config = AceConfig(
        layers=args.layers,
        vq_bits=args.vq_bits,
        hist_bits=args.hist_bits,
        wedge=not args.no_wedge,
        seed=args.seed,
    )
    model = train_model(img, config)
    frames = propagate(model, img)
    for layer, dist in zip(model.layers, layer_distortions(model, frames)):
        g = layer.geometry
        print(f"layer {g.level} dir {g.direction} offset {g.offset} "
              f"field {g.field_w}x{g.field_h} distortion {dist:.6g}")
    print(f"train_seconds {time.perf_counter() - started:.3f}")
    Path(args.output).write_bytes(save_model(model))
    print(f"wrote {args.output}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    model = load_model(Path(args.model).read_bytes())
    img = read_pgm(Path(args.input).read_bytes())
    frames = propagate(model, img)
    sources = compute_sources(model, frames)
    geoms = [layer.geometry for layer in model.layers]
    invert = args.mode == "anomaly"

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for level in range(len(sources)):
        disp = to_display(layer_image(sources, level, geoms), invert=invert)
        path = out_dir / f"layer_{level:02d}.pgm"
        path.write_bytes(write_pgm(disp))
        print(f"wrote {path}")
    if args.combined:
        disp = to_display(backpropagate(sources, geoms), invert=invert)
        path = out_dir / "combined.pgm"
        path.write_bytes(write_pgm(disp))
        print(f"wrote {path}")

    total = total_logprob(sources)
    print(f"total_logprob {total:.9g}")
    print(f"per_pixel_logprob {total / (img.width * img.height):.9g}")
    return 0


def cmd_info(args: argparse.Namespace) -> int:
    model = load_model(Path(args.model).read_bytes())
    c = model.config
    print(f"width {model.width} height {model.height} layers {c.layers} "
          f"vq_bits {c.vq_bits} hist_bits {c.hist_bits} wedge {int(c.wedge)} seed {c.seed}")
    leaf = model.leaf_hist
    print(f"leaf_hist occupancy {np.count_nonzero(leaf.counts) / leaf.counts.size:.6g} "
          f"total {leaf.total}")
    for layer in model.layers:
        g = layer.geometry
        counts = layer.hist.counts
        occ = np.count_nonzero(counts) / counts.size
        v = layer.codebook.vectors
        print(f"layer {g.level} dir {g.direction} offset {g.offset} "
              f"field {g.field_w}x{g.field_h} occupancy {occ:.6g} "
              f"codebook_x {v[:, 0].min():.6g}..{v[:, 0].max():.6g} "
              f"codebook_y {v[:, 1].min():.6g}..{v[:, 1].max():.6g}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .report import write_report

    model = load_model(Path(args.model).read_bytes())
    img = read_pgm(Path(args.input).read_bytes())
    total = write_report(model, img, Path(args.out_dir), mode=args.mode)
    print(f"total_logprob {total:.9g}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

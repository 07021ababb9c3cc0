"""Command-line front end: ``vqforge {train,encode,decode,metrics,benchmark}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import imaging, pipeline, quantizer
from .ide import IdeConfig
from .lbg import LbgConfig

EXIT_IO = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    return [_positive_int(t) for t in text.split(",") if t.strip()]


def _method_list(text: str) -> list[str]:
    out = [t.strip() for t in text.split(",") if t.strip()]
    for m in out:
        if m not in pipeline.METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}")
    return out


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _default_seed() -> int:
    env = os.environ.get("VQFORGE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        return 0


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=_default_seed(),
                   help="RNG seed (falls back to $VQFORGE_SEED)")
    p.add_argument("--block-side", type=_positive_int, default=4, help="block side n (blocks are n x n)")
    p.add_argument("--np", dest="np_", type=_positive_int, default=20, help="IDE population size")
    p.add_argument("--generations", type=_positive_int, default=10, help="IDE generations")
    p.add_argument("--epsilon", type=float, default=0.001, help="LBG stopping threshold on |D_{m-1} - D_m|")
    p.add_argument("--cr", type=_probability, default=0.9, help="IDE crossover rate")
    p.add_argument("--f-scale", type=float, default=3.0, help="scale of the normal draw for F")
    p.add_argument("--clamp-prob", type=_probability, default=0.5,
                   help="probability a boundary violation is clamped rather than redrawn")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="vqforge", description="Vector-quantization image compression.",
                     formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", default=False,
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="design a codebook for an image", formatter_class=fmt)
    p.add_argument("--image", required=True, help="input PGM (P5)")
    p.add_argument("--nc", type=_positive_int, default=256, help="codebook size N_c")
    p.add_argument("--method", choices=pipeline.METHODS, default=pipeline.IDE_LBG, help="training method")
    p.add_argument("--out", default="codebook.txt", help="codebook file to write")
    _add_training_flags(p)

    p = sub.add_parser("encode", help="quantize an image with a codebook", formatter_class=fmt)
    p.add_argument("image", help="input PGM (P5)")
    p.add_argument("codebook", help="VQCB codebook file")
    p.add_argument("--out", default="encoded.vqim", help="VQIM file to write")

    p = sub.add_parser("decode", help="reconstruct an image from a VQIM file", formatter_class=fmt)
    p.add_argument("encoded", help="VQIM file")
    p.add_argument("--out", default="decoded.pgm", help="PGM file to write")

    p = sub.add_parser("metrics", help="MSE/PSNR of a reconstruction", formatter_class=fmt)
    p.add_argument("original", help="original PGM")
    p.add_argument("reconstructed", help="reconstructed PGM, or a VQIM file (also gives bpp)")
    p.add_argument("--nc", type=_positive_int, default=None, help="codebook size for bpp")
    p.add_argument("--block-side", type=_positive_int, default=4, help="block side n for bpp")

    p = sub.add_parser("benchmark", help="PSNR vs codebook size sweep", formatter_class=fmt)
    p.add_argument("--images", nargs="+", required=True, help="input PGM files")
    p.add_argument("--sizes", type=_int_list, default=list(pipeline.DEFAULT_SIZES),
                   help="comma-separated codebook sizes")
    p.add_argument("--runs", type=_positive_int, default=pipeline.DEFAULT_RUNS, help="runs per cell")
    p.add_argument("--methods", type=_method_list, default=list(pipeline.METHODS),
                   help="comma-separated methods")
    p.add_argument("--report", default="benchmark_runs.csv", help="per-run CSV to write")
    p.add_argument("--out", default="benchmark_summary.csv", help="summary CSV to write")
    _add_training_flags(p)
    return parser


def _configs(args) -> tuple[IdeConfig, LbgConfig]:
    ide = IdeConfig(
        population_size=args.np_, generations=args.generations, crossover_rate=args.cr,
        f_scale=args.f_scale, repair_clamp_probability=args.clamp_prob, seed=args.seed,
    )
    return ide, LbgConfig(epsilon=args.epsilon)


def cmd_train(args) -> int:
    img = imaging.load_image(args.image)
    ide_cfg, lbg_cfg = _configs(args)
    cb, report = pipeline.train(
        args.method, img, args.nc, args.seed, ide_cfg, lbg_cfg,
        args.block_side, imaging.image_id(args.image), args.threads,
    )
    quantizer.save_codebook(cb, args.out)
    sys.stdout.write(pipeline.report_csv([report], header=False))
    return 0


def cmd_encode(args) -> int:
    img = imaging.load_image(args.image)
    cb = quantizer.load_codebook(args.codebook)
    n = int(round(cb.dim ** 0.5))
    if n * n != cb.dim:
        raise ValueError(f"codebook dim {cb.dim} is not a square block size")
    im = quantizer.encode(imaging.extract_blocks(img, n), cb)
    quantizer.save_encoded(im, cb, args.out)
    return 0


def cmd_decode(args) -> int:
    im, cb = quantizer.load_encoded(args.encoded)
    imaging.save_image(quantizer.decode(im, cb), args.out)
    return 0


def cmd_metrics(args) -> int:
    original = imaging.load_image(args.original)
    with open(args.reconstructed, "rb") as fh:
        is_vqim = fh.read(4) == quantizer.ENCODED_MAGIC
    rate = None
    if is_vqim:
        im, cb = quantizer.load_encoded(args.reconstructed)
        recon = quantizer.decode(im, cb)
        rate = quantizer.bpp(cb.size, im.block_side ** 2)
    else:
        recon = imaging.load_image(args.reconstructed)
        if args.nc is not None:
            rate = quantizer.bpp(args.nc, args.block_side ** 2)
    err = quantizer.mse(original, recon)
    line = f"mse={pipeline.fmt(err)} psnr={pipeline.fmt(quantizer.psnr(err))}"
    if rate is not None:
        line += f" bpp={pipeline.fmt(rate)}"
    print(line)
    return 0


def cmd_benchmark(args) -> int:
    ide_cfg, lbg_cfg = _configs(args)
    reports, summary = [], []
    for path in args.images:
        img = imaging.load_image(path)
        rs, ss = pipeline.benchmark_sweep(
            img, args.sizes, args.runs, args.seed, args.methods, ide_cfg, lbg_cfg,
            args.block_side, imaging.image_id(path), args.threads,
        )
        reports.extend(rs)
        summary.extend(ss)
    with open(args.report, "w", newline="") as fh:
        fh.write(pipeline.report_csv(reports))
    with open(args.out, "w", newline="") as fh:
        fh.write(pipeline.summary_csv(summary))
    return 0


COMMANDS = {
    "train": cmd_train,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "metrics": cmd_metrics,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (OSError, quantizer.FormatError, imaging.PGMError) as exc:
        print(f"vqforge {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"vqforge {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

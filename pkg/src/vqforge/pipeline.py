"""IDE-LBG training, the random-init LBG baseline, and the benchmark sweep."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .ide import GenerationStats, IdeConfig, ide_optimize, substream
from .imaging import GrayImage, extract_blocks
from .lbg import LbgConfig, LbgTrace, lbg_refine
from .quantizer import Codebook, bpp, decode, encode, mse, psnr

log = logging.getLogger(__name__)

IDE_LBG = "ide-lbg"
LBG_RANDOM = "lbg-random"
METHODS = (IDE_LBG, LBG_RANDOM)

DEFAULT_SIZES = (8, 16, 32, 64, 128, 256)
DEFAULT_RUNS = 10

REPORT_HEADER = (
    "method", "image", "nc", "bpp", "seed", "ide_best_psnr",
    "final_psnr", "lbg_iterations", "wall_time_s",
)
SUMMARY_HEADER = ("method", "image", "nc", "bpp", "mean_psnr", "std_psnr", "runs")


@dataclass
class RunReport:
    method: str
    image: str
    nc: int
    bpp: float
    seed: int
    final_psnr: float
    # NaN for methods without an IDE stage.
    ide_best_psnr: float
    lbg_iterations: int
    wall_time: float
    trace: LbgTrace = field(repr=False, default_factory=LbgTrace)
    ide_history: list[GenerationStats] = field(repr=False, default_factory=list)

    def row(self) -> list[str]:
        return [
            self.method, self.image, str(self.nc), fmt(self.bpp), str(self.seed),
            fmt(self.ide_best_psnr), fmt(self.final_psnr), str(self.lbg_iterations),
            f"{self.wall_time:.3f}",
        ]


@dataclass(frozen=True)
class SummaryRow:
    method: str
    image: str
    nc: int
    bpp: float
    mean_psnr: float
    std_psnr: float
    runs: int

    def row(self) -> list[str]:
        return [
            self.method, self.image, str(self.nc), fmt(self.bpp),
            fmt(self.mean_psnr), fmt(self.std_psnr), str(self.runs),
        ]


def fmt(value: float) -> str:
    """Full-precision float text; integral values print without a trailing '.0'."""
    return f"{value:.17g}"


def train_ide_lbg(
    img: GrayImage,
    nc: int,
    ide_cfg: IdeConfig | None = None,
    lbg_cfg: LbgConfig | None = None,
    block_side: int = 4,
    image_id: str = "",
    threads: int = 1,
) -> tuple[Codebook, RunReport]:
    """IDE search for an initial codebook, then LBG refinement from it."""
    ide_cfg = ide_cfg or IdeConfig()
    t0 = time.perf_counter()
    ts = extract_blocks(img, block_side)
    best, history = ide_optimize(ts, img, nc, ide_cfg, threads=threads)
    cb, trace = lbg_refine(ts, best.codebook(ts.dim), lbg_cfg)
    final = psnr(mse(img, decode(encode(ts, cb), cb)))
    report = RunReport(
        method=IDE_LBG, image=image_id, nc=nc, bpp=bpp(nc, ts.dim), seed=ide_cfg.seed,
        final_psnr=final, ide_best_psnr=best.fitness, lbg_iterations=trace.iterations_run,
        wall_time=time.perf_counter() - t0, trace=trace, ide_history=history,
    )
    return cb, report


def train_lbg_random(
    img: GrayImage,
    nc: int,
    lbg_cfg: LbgConfig | None = None,
    seed: int = 0,
    block_side: int = 4,
    image_id: str = "",
) -> tuple[Codebook, RunReport]:
    """LBG started from N_c training blocks drawn without replacement."""
    t0 = time.perf_counter()
    ts = extract_blocks(img, block_side)
    if not 1 <= nc <= len(ts):
        raise ValueError(f"codebook size {nc} must be in [1, {len(ts)}] (number of blocks)")
    picks = substream(seed, 0).choice(len(ts), size=nc, replace=False)
    cb, trace = lbg_refine(ts, Codebook(ts.vectors[picks]), lbg_cfg)
    final = psnr(mse(img, decode(encode(ts, cb), cb)))
    report = RunReport(
        method=LBG_RANDOM, image=image_id, nc=nc, bpp=bpp(nc, ts.dim), seed=seed,
        final_psnr=final, ide_best_psnr=math.nan, lbg_iterations=trace.iterations_run,
        wall_time=time.perf_counter() - t0, trace=trace,
    )
    return cb, report


def train(
    method: str,
    img: GrayImage,
    nc: int,
    seed: int,
    ide_cfg: IdeConfig | None = None,
    lbg_cfg: LbgConfig | None = None,
    block_side: int = 4,
    image_id: str = "",
    threads: int = 1,
) -> tuple[Codebook, RunReport]:
    if method == IDE_LBG:
        cfg = replace(ide_cfg or IdeConfig(), seed=seed)
        return train_ide_lbg(img, nc, cfg, lbg_cfg, block_side, image_id, threads)
    if method == LBG_RANDOM:
        return train_lbg_random(img, nc, lbg_cfg, seed, block_side, image_id)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def summarize(reports: list[RunReport]) -> list[SummaryRow]:
    groups: dict[tuple[str, str, int], list[RunReport]] = {}
    for r in reports:
        groups.setdefault((r.method, r.image, r.nc), []).append(r)
    out = []
    for (method, image, nc), rs in groups.items():
        vals = np.array([r.final_psnr for r in rs])
        if np.all(vals == vals[0]):
            std = 0.0  # also covers all-lossless (inf) cells
        else:
            with np.errstate(invalid="ignore"):
                std = float(vals.std())
        out.append(SummaryRow(method, image, nc, rs[0].bpp, float(vals.mean()), std, len(rs)))
    return out


def benchmark_sweep(
    img: GrayImage,
    sizes=DEFAULT_SIZES,
    runs: int = DEFAULT_RUNS,
    base_seed: int = 0,
    methods=METHODS,
    ide_cfg: IdeConfig | None = None,
    lbg_cfg: LbgConfig | None = None,
    block_side: int = 4,
    image_id: str = "",
    threads: int = 1,
) -> tuple[list[RunReport], list[SummaryRow]]:
    """One training run per (method, N_c, run); run r uses seed base_seed + r.

    Rows come back in (method, N_c, run) order as given by the arguments.
    """
    sizes = list(sizes)
    methods = list(methods)
    if not sizes:
        raise ValueError("sizes must be non-empty")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")

    reports = []
    for method in methods:
        for nc in sizes:
            for r in range(runs):
                _, rep = train(
                    method, img, nc, base_seed + r, ide_cfg, lbg_cfg,
                    block_side, image_id, threads,
                )
                log.info("%s %s nc=%d seed=%d psnr=%.3f (%.1fs)",
                         method, image_id, nc, rep.seed, rep.final_psnr, rep.wall_time)
                reports.append(rep)
    return reports, summarize(reports)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def report_csv(reports: list[RunReport], header: bool = True) -> str:
    text = _csv(REPORT_HEADER, [r.row() for r in reports])
    return text if header else text.split("\n", 1)[1]


def summary_csv(summary: list[SummaryRow]) -> str:
    return _csv(SUMMARY_HEADER, [s.row() for s in summary])

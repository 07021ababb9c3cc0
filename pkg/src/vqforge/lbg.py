"""LBG (generalised Lloyd) codebook refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .imaging import TrainingSet
from .quantizer import Codebook, IndexMap, assign

RESEED_FARTHEST = "reseed-farthest"
KEEP = "keep"
EMPTY_CELL_POLICIES = (RESEED_FARTHEST, KEEP)


@dataclass(frozen=True)
class LbgConfig:
    epsilon: float = 0.001
    max_iterations: int = 100
    empty_cell_policy: str = RESEED_FARTHEST
    # Compare |D_{m-1} - D_m| / D_{m-1} against epsilon instead of the absolute change.
    relative: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.empty_cell_policy not in EMPTY_CELL_POLICIES:
            raise ValueError(
                f"empty_cell_policy must be one of {EMPTY_CELL_POLICIES}, "
                f"got {self.empty_cell_policy!r}"
            )


@dataclass
class LbgTrace:
    """Distortion per iteration.

    ``initial_distortion`` is the distortion of the starting codebook under its
    own nearest-neighbour partition; ``distortions[m-1]`` is D_m after the
    m-th centroid update. Both use the 1/N_c normalisation.
    """

    initial_distortion: float = math.nan
    distortions: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations_run(self) -> int:
        return len(self.distortions)

    def to_csv(self) -> str:
        rows = ["iteration,distortion"]
        rows.extend(f"{m},{d!r}" for m, d in enumerate(self.distortions, start=1))
        return "\n".join(rows) + "\n"


def _update(
    vectors: np.ndarray,
    indices: np.ndarray,
    sq_dist: np.ndarray,
    codewords: np.ndarray,
    policy: str,
) -> tuple[np.ndarray, bool]:
    nc, dim = codewords.shape
    counts = np.bincount(indices, minlength=nc)
    sums = np.stack(
        [np.bincount(indices, weights=vectors[:, k], minlength=nc) for k in range(dim)],
        axis=1,
    )
    new = codewords.copy()
    filled = counts > 0
    new[filled] = sums[filled] / counts[filled, None]

    reseeded = False
    empty = np.flatnonzero(~filled)
    if policy == RESEED_FARTHEST and empty.size:
        # Farthest vectors from their current codeword, stable order on ties.
        order = np.argsort(-sq_dist, kind="stable")
        for j, i in zip(empty, order):
            if sq_dist[i] <= 0:
                break
            new[j] = vectors[i]
            reseeded = True
    return new, reseeded


def centroid_update(
    ts: TrainingSet,
    im: IndexMap,
    cb: Codebook,
    empty_cell_policy: str = RESEED_FARTHEST,
) -> Codebook:
    """Move each codeword to the mean of its partition cell.

    Codewords whose cell is empty are either left where they are (``keep``)
    or moved onto the training vectors farthest from their assigned codeword
    (``reseed-farthest``).
    """
    if ts.dim != cb.dim:
        raise ValueError(f"dimension mismatch: vectors have dim {ts.dim}, codebook has dim {cb.dim}")
    if len(im.indices) != len(ts) or im.codebook_size != cb.size:
        raise ValueError("index map does not match training set / codebook")
    if empty_cell_policy not in EMPTY_CELL_POLICIES:
        raise ValueError(f"unknown empty cell policy {empty_cell_policy!r}")
    diff = ts.vectors - cb.codewords[im.indices]
    sq = np.einsum("ij,ij->i", diff, diff)
    new, _ = _update(ts.vectors, im.indices, sq, cb.codewords, empty_cell_policy)
    return Codebook(new)


def lbg_refine(
    ts: TrainingSet, initial: Codebook, cfg: LbgConfig | None = None
) -> tuple[Codebook, LbgTrace]:
    """Alternate nearest-neighbour partitioning and centroid updates.

    Stops once |D_{m-1} - D_m| <= epsilon (D_0 being the distortion of the
    initial codebook) or after ``cfg.max_iterations`` updates. An iteration
    that reseeded an empty cell never counts as converged.
    """
    cfg = cfg or LbgConfig()
    if len(ts) == 0:
        raise ValueError("empty training set")
    if ts.dim != initial.dim:
        raise ValueError(
            f"dimension mismatch: vectors have dim {ts.dim}, codebook has dim {initial.dim}"
        )

    X = ts.vectors
    nc = initial.size
    codewords = initial.codewords
    indices, sq = assign(X, codewords)
    prev = float(sq.sum()) / nc
    trace = LbgTrace(initial_distortion=prev)

    for _ in range(cfg.max_iterations):
        codewords, reseeded = _update(X, indices, sq, codewords, cfg.empty_cell_policy)
        diff = X - codewords[indices]
        d_m = float(np.sum(diff * diff)) / nc
        trace.distortions.append(d_m)

        change = abs(prev - d_m)
        if cfg.relative:
            change = change / prev if prev > 0 else 0.0
        if not reseeded and change <= cfg.epsilon:
            trace.converged = True
            break
        prev = d_m
        indices, sq = assign(X, codewords)

    return Codebook(codewords), trace

"""Codebooks, nearest-codeword encoding, decoding and quality metrics.

Also holds the two on-disk formats: the text codebook file (``VQCB``) and
the binary encoded-image file (``VQIM``).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .imaging import GeometryError, GrayImage, TrainingSet, assemble_blocks

PEAK = 255.0


class FormatError(ValueError):
    """Unreadable codebook or encoded-image file."""


@dataclass(frozen=True, eq=False)
class Codebook:
    """``codewords`` is a read-only (N_c, dim) float64 array with entries in [0, 255]."""

    codewords: np.ndarray

    def __post_init__(self):
        cw = np.array(self.codewords, dtype=np.float64, copy=True)
        if cw.ndim != 2 or cw.shape[0] < 1 or cw.shape[1] < 1:
            raise ValueError(f"codebook needs shape (N_c >= 1, dim >= 1), got {cw.shape}")
        if not np.all(np.isfinite(cw)) or cw.min() < 0.0 or cw.max() > PEAK:
            raise ValueError("codeword components must lie in [0, 255]")
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return self.codewords.shape == other.codewords.shape and bool(
            np.array_equal(self.codewords, other.codewords)
        )


@dataclass(frozen=True, eq=False)
class IndexMap:
    """One codeword index per block, raster block order."""

    indices: np.ndarray
    codebook_size: int
    width: int
    height: int
    block_side: int

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64, copy=True)
        n = self.block_side
        if n < 1 or self.width % n or self.height % n:
            raise GeometryError(f"block side {n} does not divide {self.width}x{self.height}")
        expected = (self.width // n) * (self.height // n)
        if idx.shape != (expected,):
            raise GeometryError(f"expected {expected} indices, got shape {idx.shape}")
        if self.codebook_size < 1:
            raise ValueError("codebook_size must be >= 1")
        if idx.size and (idx.min() < 0 or idx.max() >= self.codebook_size):
            raise IndexError(f"codeword index out of range [0, {self.codebook_size})")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __eq__(self, other):
        if not isinstance(other, IndexMap):
            return NotImplemented
        return (
            (self.codebook_size, self.width, self.height, self.block_side)
            == (other.codebook_size, other.width, other.height, other.block_side)
            and bool(np.array_equal(self.indices, other.indices))
        )


def _check_dim(dim_a: int, dim_b: int) -> None:
    if dim_a != dim_b:
        raise ValueError(f"dimension mismatch: vectors have dim {dim_a}, codebook has dim {dim_b}")


def assign(vectors: np.ndarray, codewords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest codeword for every row of ``vectors``.

    Returns ``(indices, squared_distances)``. Distances are full squared
    Euclidean sums of componentwise differences; ties go to the lowest index.
    """
    d = cdist(vectors, codewords, "sqeuclidean")
    idx = np.argmin(d, axis=1)
    return idx, d[np.arange(len(idx)), idx]


def nearest_codeword(x, cb: Codebook) -> tuple[int, float]:
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    _check_dim(x.shape[1], cb.dim)
    idx, dist = assign(x, cb.codewords)
    return int(idx[0]), float(dist[0])


def encode(ts: TrainingSet, cb: Codebook) -> IndexMap:
    _check_dim(ts.dim, cb.dim)
    idx, _ = assign(ts.vectors, cb.codewords)
    return IndexMap(idx, cb.size, ts.source_width, ts.source_height, ts.block_side)


def decode(im: IndexMap, cb: Codebook) -> GrayImage:
    if im.codebook_size != cb.size:
        raise ValueError(
            f"index map expects {im.codebook_size} codewords, codebook has {cb.size}"
        )
    _check_dim(im.block_side * im.block_side, cb.dim)
    blocks = TrainingSet(cb.codewords[im.indices], im.width, im.height, im.block_side)
    return assemble_blocks(blocks)


def _assigned_sq_error(ts: TrainingSet, cb: Codebook, im: IndexMap) -> float:
    _check_dim(ts.dim, cb.dim)
    if len(im.indices) != len(ts):
        raise ValueError(f"index map has {len(im.indices)} entries for {len(ts)} vectors")
    if im.codebook_size != cb.size:
        raise ValueError(
            f"index map expects {im.codebook_size} codewords, codebook has {cb.size}"
        )
    diff = ts.vectors - cb.codewords[im.indices]
    return float(np.sum(diff * diff))


def distortion(ts: TrainingSet, cb: Codebook, im: IndexMap) -> float:
    """Total squared error of the partition divided by the codebook size N_c.

    The 1/N_c normalisation (rather than 1/N_b) is deliberate; see
    :func:`mean_per_vector` for the per-vector mean.
    """
    return _assigned_sq_error(ts, cb, im) / cb.size


def mean_per_vector(ts: TrainingSet, cb: Codebook, im: IndexMap) -> float:
    """Diagnostic variant of :func:`distortion` normalised by the block count."""
    return _assigned_sq_error(ts, cb, im) / len(ts)


def mse(a: GrayImage, b: GrayImage) -> float:
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(
            f"image size mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    diff = a.pixels.astype(np.int64) - b.pixels.astype(np.int64)
    return float(np.sum(diff * diff)) / diff.size


def psnr(mse_value: float) -> float:
    """10*log10(255^2 / MSE) in dB; ``math.inf`` when MSE is zero."""
    if mse_value < 0 or math.isnan(mse_value):
        raise ValueError(f"MSE must be non-negative, got {mse_value}")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse_value)


def bpp(codebook_size: int, block_pixels: int) -> float:
    if codebook_size < 1 or block_pixels < 1:
        raise ValueError("codebook size and block pixel count must be >= 1")
    return math.log2(codebook_size) / block_pixels


# -- file formats -------------------------------------------------------------

CODEBOOK_MAGIC = "VQCB"
ENCODED_MAGIC = b"VQIM"
_ENCODED_HEADER = struct.Struct("<4s4I")


def format_codebook(cb: Codebook) -> str:
    lines = [f"{CODEBOOK_MAGIC} {cb.size} {cb.dim}"]
    # repr() is the shortest string that round-trips the float64 exactly.
    lines.extend(" ".join(repr(float(v)) for v in row) for row in cb.codewords)
    return "\n".join(lines) + "\n"


def parse_codebook(text: str) -> Codebook:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("bad VQCB header: empty file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != CODEBOOK_MAGIC:
        raise FormatError(f"bad VQCB header: {lines[0][:40]!r}")
    try:
        nc, dim = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError(f"bad VQCB header: {lines[0][:40]!r}") from None
    rows = lines[1:]
    if len(rows) != nc:
        raise FormatError(f"VQCB declares {nc} codewords, found {len(rows)}")
    try:
        values = np.array([[float(v) for v in row.split()] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"bad VQCB codeword line: {exc}") from None
    if values.shape != (nc, dim):
        raise FormatError(f"VQCB codeword lines do not all have {dim} components")
    return Codebook(values)


def save_codebook(cb: Codebook, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_codebook(cb))


def load_codebook(path) -> Codebook:
    with open(path, encoding="ascii") as fh:
        return parse_codebook(fh.read())


def pack_encoded(im: IndexMap, cb: Codebook) -> bytes:
    if im.codebook_size != cb.size:
        raise ValueError("index map and codebook disagree on N_c")
    if cb.size > 1 << 16:
        raise ValueError("VQIM stores u16 indices; N_c must be <= 65536")
    head = _ENCODED_HEADER.pack(ENCODED_MAGIC, im.width, im.height, im.block_side, cb.size)
    return (
        head
        + cb.codewords.astype("<f8").tobytes()
        + im.indices.astype("<u2").tobytes()
    )


def unpack_encoded(data: bytes) -> tuple[IndexMap, Codebook]:
    if len(data) < _ENCODED_HEADER.size or data[:4] != ENCODED_MAGIC:
        raise FormatError("bad VQIM header")
    _, width, height, n, nc = _ENCODED_HEADER.unpack_from(data)
    if n < 1 or nc < 1 or width % n or height % n:
        raise FormatError(f"bad VQIM header: geometry {width}x{height}/{n}, N_c={nc}")
    dim = n * n
    nblocks = (width // n) * (height // n)
    cb_end = _ENCODED_HEADER.size + nc * dim * 8
    expected = cb_end + nblocks * 2
    if len(data) != expected:
        raise FormatError(f"VQIM payload is {len(data)} bytes, expected {expected}")
    codewords = np.frombuffer(data, dtype="<f8", count=nc * dim, offset=_ENCODED_HEADER.size)
    indices = np.frombuffer(data, dtype="<u2", count=nblocks, offset=cb_end)
    cb = Codebook(codewords.reshape(nc, dim))
    return IndexMap(indices, nc, width, height, n), cb


def save_encoded(im: IndexMap, cb: Codebook, path) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_encoded(im, cb))


def load_encoded(path) -> tuple[IndexMap, Codebook]:
    with open(path, "rb") as fh:
        return unpack_encoded(fh.read())

"""Grayscale image I/O (binary PGM) and block splitting/reassembly."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


class PGMError(ValueError):
    """Base class for unreadable PGM input."""


class MalformedHeaderError(PGMError):
    pass


class UnsupportedMaxvalError(PGMError):
    pass


class TruncatedDataError(PGMError):
    pass


class GeometryError(ValueError):
    """Block side and image/block-set geometry disagree."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image; ``pixels`` is a read-only (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"expected a non-empty 2-D pixel grid, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255) or np.any(arr != np.round(arr)):
                raise ValueError("pixel values must be integers in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Block vectors of one image, in raster block order.

    ``vectors`` has shape (num_blocks, block_side**2); each row is one block
    flattened row-major.
    """

    vectors: np.ndarray
    source_width: int
    source_height: int
    block_side: int

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=np.float64, copy=True)
        n = self.block_side
        if n < 1:
            raise GeometryError(f"block side must be >= 1, got {n}")
        if self.source_width % n or self.source_height % n:
            raise GeometryError(
                f"block side {n} does not divide {self.source_width}x{self.source_height}"
            )
        expected = (self.source_width // n) * (self.source_height // n)
        if vec.ndim != 2 or vec.shape != (expected, n * n):
            raise GeometryError(
                f"expected {expected} vectors of dim {n * n}, got array of shape {vec.shape}"
            )
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)

    @property
    def dim(self) -> int:
        return self.block_side * self.block_side

    def __len__(self):
        return self.vectors.shape[0]


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Header tokens are whitespace separated; '#' starts a comment running to end of line.
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeaderError("malformed PGM header: unexpected end of header")
    return data[start:pos], pos


def load_image(path) -> GrayImage:
    """Read a binary (P5) PGM with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()

    magic, pos = _read_token(data, 0) if data else (b"", 0)
    if magic != b"P5":
        raise MalformedHeaderError(f"malformed PGM header: expected magic P5, got {magic[:8]!r}")
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _read_token(data, pos)
        if not tok.isdigit():
            raise MalformedHeaderError(f"malformed PGM header: bad {name} {tok[:16]!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"malformed PGM header: bad size {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported PGM maxval {maxval} (only 255 is accepted)")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedHeaderError("malformed PGM header: missing whitespace after maxval")
    payload = data[pos + 1 :]
    need = width * height
    if len(payload) < need:
        raise TruncatedDataError(
            f"truncated PGM pixel data: expected {need} bytes, found {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8, count=need).reshape(height, width)
    return GrayImage(pixels)


def save_image(img: GrayImage, path) -> None:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(img.pixels).tobytes())


def extract_blocks(img: GrayImage, n: int = 4) -> TrainingSet:
    """Split ``img`` into non-overlapping n x n blocks in raster order."""
    h, w = img.height, img.width
    if n < 1 or w % n or h % n:
        raise GeometryError(f"block side {n} does not divide image size {w}x{h}")
    blocks = (
        img.pixels.reshape(h // n, n, w // n, n)
        .transpose(0, 2, 1, 3)
        .reshape(-1, n * n)
    )
    return TrainingSet(blocks.astype(np.float64), w, h, n)


def to_pixels(values) -> np.ndarray:
    """Round half-up and clamp real values to uint8."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def assemble_blocks(blocks: TrainingSet) -> GrayImage:
    """Inverse of :func:`extract_blocks`; real components are rounded and clamped."""
    n, w, h = blocks.block_side, blocks.source_width, blocks.source_height
    grid = (
        to_pixels(blocks.vectors)
        .reshape(h // n, w // n, n, n)
        .transpose(0, 2, 1, 3)
        .reshape(h, w)
    )
    return GrayImage(grid)


def image_id(path) -> str:
    return os.path.splitext(os.path.basename(os.fspath(path)))[0]

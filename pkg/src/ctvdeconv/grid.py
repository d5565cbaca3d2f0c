"""Image grids, vector fields, norms and binary PGM I/O.

An image grid is a 2D ``float64`` numpy array of shape ``(height, width)``.
Intensities live nominally on the [0, 255] scale but are never clamped until
export.
"""

from __future__ import annotations

import math
from typing import Literal, NamedTuple

import numpy as np

from .errors import DimensionError, ParameterError, PGMError

ImageGrid = np.ndarray
NormKind = Literal["l1", "l2", "linf"]

_WHITESPACE = b" \t\n\r\x0b\x0c"


class VectorField(NamedTuple):
    """Per-pixel x- and y-differences of an image."""

    gx: ImageGrid
    gy: ImageGrid


def as_grid(values, *, name: str = "grid") -> ImageGrid:
    """Return ``values`` as a validated, C-contiguous float64 2D grid."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def constant(width: int, height: int, value: float) -> ImageGrid:
    if width < 1 or height < 1:
        raise DimensionError(f"grid dimensions must be positive, got {width}x{height}")
    if not math.isfinite(value):
        raise ParameterError(f"fill value must be finite, got {value}")
    return np.full((height, width), float(value), dtype=np.float64)


def same_shape(a: ImageGrid, b: ImageGrid) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def norm(f: ImageGrid, p: NormKind = "l2") -> float:
    """L1, L2 or max norm of a grid (flattened)."""
    a = np.abs(np.asarray(f, dtype=np.float64)).ravel()
    if p == "l1":
        return float(a.sum())
    if p == "l2":
        if a.size == 0:
            return 0.0
        top = float(a.max())
        if top == 0.0:
            return 0.0
        if 1e-150 < top < 1e150:
            return math.sqrt(float(np.dot(a, a)))
        # rescale so the squares neither underflow nor overflow
        s = a / top
        return top * math.sqrt(float(np.dot(s, s)))
    if p == "linf":
        return float(a.max()) if a.size else 0.0
    raise ParameterError(f"unknown norm {p!r}")


def inner(a: ImageGrid, b: ImageGrid) -> float:
    same_shape(a, b)
    return float(np.dot(np.ravel(a), np.ravel(b)))


# --- PGM -------------------------------------------------------------------


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, token_start, position after token), skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    if pos >= n:
        raise PGMError("truncated header", pos)
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int, int]:
    """Return (value, token_start, position after token)."""
    tok, start, pos = _next_token(data, pos)
    if not tok.isdigit():
        raise PGMError(f"invalid {what} {tok[:16]!r}", start)
    return int(tok), start, pos


def read_pgm(data: bytes) -> ImageGrid:
    """Decode a binary 8-bit grayscale PGM (``P5``, maxval 255)."""
    if len(data) < 2:
        raise PGMError("truncated header", len(data))
    if data[:2] != b"P5":
        raise PGMError(f"wrong magic {data[:2]!r}, expected b'P5'", 0)
    pos = 2
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise PGMError("missing whitespace after magic", pos)
    width, _, pos = _header_int(data, pos, "width")
    height, _, pos = _header_int(data, pos, "height")
    maxval, maxval_start, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PGMError(f"zero dimension {width}x{height}", maxval_start)
    if maxval != 255:
        raise PGMError(f"unsupported maxval {maxval}", maxval_start)
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise PGMError("missing whitespace after maxval", pos)
    pos += 1
    need = width * height
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise PGMError(f"truncated payload: expected {need} bytes, got {len(payload)}", pos + len(payload))
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).astype(np.float64)


def quantize(f: ImageGrid) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero, as uint8."""
    clamped = np.clip(np.asarray(f, dtype=np.float64), 0.0, 255.0)
    # values are nonnegative after clamping, so floor(x + 0.5) rounds half away from zero
    return np.floor(clamped + 0.5).astype(np.uint8)


def write_pgm(f: ImageGrid) -> bytes:
    f = np.asarray(f)
    if f.ndim != 2:
        raise DimensionError(f"grid must be 2D, got shape {f.shape}")
    height, width = f.shape
    header = b"P5\n%d %d\n255\n" % (width, height)
    return header + quantize(f).tobytes()


def load_pgm(path) -> ImageGrid:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def save_pgm(f: ImageGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(f))

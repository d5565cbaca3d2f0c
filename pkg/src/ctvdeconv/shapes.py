"""Deterministic synthetic "Shape" test image.

A piecewise-constant composition on a black background: a filled rectangle,
a filled disk, a filled right triangle and a 3-pixel-wide diagonal bar, each
at its own gray level.  Geometry scales with ``size`` and none of the figures
overlap, so all five gray levels survive.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .grid import ImageGrid

BACKGROUND = 0.0
RECTANGLE = 128.0
DISK = 255.0
TRIANGLE = 192.0
BAR = 64.0
LEVELS = (0.0, 64.0, 128.0, 192.0, 255.0)
MIN_SIZE = 32


def generate_shape(size: int) -> ImageGrid:
    if int(size) != size or size < MIN_SIZE:
        raise ParameterError(f"shape size must be an integer >= {MIN_SIZE}, got {size}")
    s = int(size)
    img = np.full((s, s), BACKGROUND)
    rows, cols = np.mgrid[0:s, 0:s]

    def px(frac: float) -> int:
        return int(round(frac * s))

    img[px(0.10) : px(0.42), px(0.08) : px(0.45)] = RECTANGLE

    cy, cx, rad = px(0.27), px(0.72), px(0.17)
    img[(rows - cy) ** 2 + (cols - cx) ** 2 <= rad * rad] = DISK

    # right triangle: legs along the bottom and right sides of its bounding box
    top, bottom, left, right = px(0.55), px(0.92), px(0.55), px(0.92)
    in_box = (rows >= top) & (rows <= bottom) & (cols >= left) & (cols <= right)
    img[in_box & ((cols - left) * (bottom - top) >= (bottom - rows) * (right - left))] = TRIANGLE

    # diagonal bar running down-right through the lower-left quadrant
    r0, r1, c0 = px(0.55), px(0.92), px(0.08)
    on_bar = (rows >= r0) & (rows <= r1) & (np.abs((cols - c0) - (rows - r0)) <= 1)
    img[on_bar] = BAR
    return img

"""MSE and PSNR with the fixed 8-bit peak of 255."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ImageGrid, same_shape

PEAK = 255.0


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr_db: float  # math.inf when mse == 0


def mse(f: ImageGrid, g: ImageGrid) -> float:
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    same_shape(f, g)
    d = (f - g).ravel()
    return float(np.dot(d, d)) / d.size


def psnr_from_mse(err: float) -> float:
    if err == 0:
        return math.inf
    if math.isnan(err):
        return math.nan
    if math.isinf(err):
        return -math.inf
    return 10.0 * math.log10(PEAK * PEAK / err)


def psnr(f: ImageGrid, g: ImageGrid) -> float:
    """PSNR in dB; ``math.inf`` for identical images."""
    return psnr_from_mse(mse(f, g))


def quality(f: ImageGrid, g: ImageGrid) -> QualityReport:
    err = mse(f, g)
    return QualityReport(mse=err, psnr_db=psnr_from_mse(err))


def format_db(value: float | None) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))

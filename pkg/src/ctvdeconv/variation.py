"""Discrete gradient, divergence, total variation and the TV curvature operator.

Forward differences with a Neumann boundary (zero difference on the last
column/row) paired with the backward-difference divergence that is their exact
negative adjoint.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .grid import ImageGrid, VectorField, as_grid, same_shape

DEFAULT_BETA = 1e-3


def _check_beta(beta: float) -> float:
    if not (math.isfinite(beta) and beta > 0):
        raise ParameterError(f"smoothing beta must be positive, got {beta}")
    return float(beta)


def gradient(f: ImageGrid) -> VectorField:
    f = np.asarray(f, dtype=np.float64)
    gx = np.zeros_like(f)
    gy = np.zeros_like(f)
    gx[:, :-1] = f[:, 1:] - f[:, :-1]
    gy[:-1, :] = f[1:, :] - f[:-1, :]
    return VectorField(gx, gy)


def _backward_diff(p: np.ndarray, axis: int) -> np.ndarray:
    # drop the last entry along the axis (never produced by gradient) and take
    # q[i] - q[i-1] with q[-1] = 0
    q = np.array(p, dtype=np.float64)
    idx = [slice(None)] * 2
    idx[axis] = -1
    q[tuple(idx)] = 0.0
    out = q.copy()
    lo = [slice(None)] * 2
    hi = [slice(None)] * 2
    lo[axis] = slice(1, None)
    hi[axis] = slice(None, -1)
    out[tuple(lo)] -= q[tuple(hi)]
    return out


def divergence(v: VectorField) -> ImageGrid:
    """Negative adjoint of :func:`gradient`: ``<grad f, v> == -<f, div v>``."""
    gx, gy = v
    same_shape(np.asarray(gx), np.asarray(gy))
    return _backward_diff(gx, axis=1) + _backward_diff(gy, axis=0)


def gradient_magnitude(g: VectorField, beta: float = 0.0) -> np.ndarray:
    gx, gy = g
    return np.sqrt(gx * gx + gy * gy + beta * beta)


def total_variation(f: ImageGrid) -> float:
    """Isotropic TV: sum over pixels of the Euclidean gradient norm."""
    return float(gradient_magnitude(gradient(f)).sum())


def smoothed_tv(f: ImageGrid, beta: float = DEFAULT_BETA) -> float:
    """Differentiable surrogate ``sum_x sqrt(|grad f(x)|^2 + beta^2)``."""
    beta = _check_beta(beta)
    return float(gradient_magnitude(gradient(f), beta).sum())


def curvature_from_gradient(g: VectorField, beta: float) -> ImageGrid:
    mag = gradient_magnitude(g, beta)
    return -divergence(VectorField(g.gx / mag, g.gy / mag))


def curvature(f: ImageGrid, beta: float = DEFAULT_BETA) -> ImageGrid:
    """Smoothed TV curvature ``L_beta(f) = -div(grad f / sqrt(|grad f|^2 + beta^2))``.

    This is the exact gradient of :func:`smoothed_tv`, i.e. the ascent
    direction of TV, so ``f - h * curvature(f)`` is a TV-descent step.
    """
    beta = _check_beta(beta)
    return curvature_from_gradient(gradient(as_grid(f)), beta)

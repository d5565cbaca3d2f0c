"""Periodic convolution operators, their adjoints, and seeded noise.

Convolution is computed directly in the spatial domain with periodic wrap::

    (K f)(x) = sum_y taps(y) * f(x - y)

so the adjoint is convolution with the point-reflected taps and the pairing
``<K a, b> == <a, K* b>`` holds to rounding error.  Taps are accumulated in a
fixed row-major order, which keeps results bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .grid import ImageGrid, as_grid

# Noise generator pinned to numpy's PCG64 bit generator with the default
# (ziggurat) standard-normal sampler.
NOISE_BIT_GENERATOR = "PCG64"


@dataclass(frozen=True)
class ConvolutionKernel:
    """Finite tap array centred on offset (0, 0).

    ``taps[ry + dy, rx + dx]`` is the weight at offset ``(dy, dx)``.
    """

    taps: np.ndarray
    normalized: bool = False
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
            raise DimensionError(f"tap array must be 2D with odd sides, got {taps.shape}")
        if not np.all(np.isfinite(taps)):
            raise ParameterError("kernel taps must be finite")
        if self.normalized and abs(taps.sum() - 1.0) > 1e-12:
            raise ParameterError(f"normalized kernel sums to {taps.sum()!r}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def radius_x(self) -> int:
        return self.taps.shape[1] // 2

    @property
    def radius_y(self) -> int:
        return self.taps.shape[0] // 2

    def tap(self, dy: int, dx: int) -> float:
        return float(self.taps[self.radius_y + dy, self.radius_x + dx])

    def reflected(self) -> "ConvolutionKernel":
        return ConvolutionKernel(self.taps[::-1, ::-1], normalized=False, name=self.name + "*")

    @property
    def is_identity(self) -> bool:
        return self.taps.shape == (1, 1) and self.taps[0, 0] == 1.0


@dataclass(frozen=True)
class NoiseSpec:
    sigma_n: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma_n >= 0.0 and math.isfinite(self.sigma_n)):
            raise ParameterError(f"noise sigma must be finite and >= 0, got {self.sigma_n}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def _normalize(taps: np.ndarray) -> np.ndarray:
    taps = taps / taps.sum()
    # push the residual rounding error into the centre tap so the sum is 1 to the last ulp or so
    cy, cx = taps.shape[0] // 2, taps.shape[1] // 2
    taps[cy, cx] += 1.0 - taps.sum()
    return taps


def gaussian_radius(sigma_b: float) -> int:
    return int(math.ceil(4.0 * sigma_b))


def make_gaussian_kernel(sigma_b: float, *, normalize: bool = True) -> ConvolutionKernel:
    """Sampled isotropic Gaussian truncated at radius ``ceil(4 * sigma_b)``.

    With ``normalize=False`` the taps are the raw density values
    ``exp(-|y|^2 / (2 sigma_b^2)) / (2 pi sigma_b^2)``.
    """
    if not (math.isfinite(sigma_b) and sigma_b > 0):
        raise ParameterError(f"sigma_b must be positive and finite, got {sigma_b}")
    r = gaussian_radius(sigma_b)
    offs = np.arange(-r, r + 1, dtype=np.float64)
    sq = offs[:, None] ** 2 + offs[None, :] ** 2
    taps = np.exp(-sq / (2.0 * sigma_b * sigma_b)) / (2.0 * math.pi * sigma_b * sigma_b)
    if normalize:
        taps = _normalize(taps)
    return ConvolutionKernel(taps, normalized=normalize, name=f"gaussian({sigma_b:g})")


def make_box_kernel(n: int) -> ConvolutionKernel:
    if int(n) != n or n < 1 or n % 2 == 0:
        raise ParameterError(f"box size must be an odd positive integer, got {n}")
    n = int(n)
    taps = np.full((n, n), 1.0 / (n * n))
    if n > 1:
        taps = _normalize(taps)
    return ConvolutionKernel(taps, normalized=True, name=f"box({n})")


def identity_kernel() -> ConvolutionKernel:
    return ConvolutionKernel(np.ones((1, 1)), normalized=True, name="identity")


def parse_kernel_text(text: str, *, normalize: bool = False) -> ConvolutionKernel:
    """Parse ``"rx ry"`` followed by ``2*ry+1`` rows of ``2*rx+1`` reals."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParameterError("empty kernel file")
    try:
        rx, ry = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ParameterError(f"bad kernel header {lines[0]!r}") from exc
    if rx < 0 or ry < 0:
        raise ParameterError(f"negative kernel radius in {lines[0]!r}")
    rows = lines[1:]
    if len(rows) != 2 * ry + 1:
        raise DimensionError(f"expected {2 * ry + 1} tap rows, got {len(rows)}")
    try:
        taps = np.array([[float(t) for t in row.split()] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise ParameterError(f"non-numeric tap: {exc}") from exc
    if taps.shape != (2 * ry + 1, 2 * rx + 1):
        raise DimensionError(f"expected {2 * rx + 1} taps per row")
    if normalize:
        if taps.sum() == 0:
            raise ParameterError("cannot normalize taps summing to zero")
        taps = _normalize(taps)
    return ConvolutionKernel(taps, normalized=normalize, name="file")


def load_kernel(path, *, normalize: bool = False) -> ConvolutionKernel:
    with open(path, encoding="utf-8") as fh:
        return parse_kernel_text(fh.read(), normalize=normalize)


def format_kernel_text(kernel: ConvolutionKernel) -> str:
    lines = [f"{kernel.radius_x} {kernel.radius_y}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in kernel.taps]
    return "\n".join(lines) + "\n"


def _convolve_periodic(taps: np.ndarray, f: np.ndarray) -> np.ndarray:
    """sum_y taps(y) * f(x - y) with periodic wrap."""
    h, w = f.shape
    ry, rx = taps.shape[0] // 2, taps.shape[1] // 2
    if ry >= h or rx >= w:
        raise DimensionError(f"kernel radius ({ry}, {rx}) must be smaller than grid {f.shape}")
    padded = np.pad(f, ((ry, ry), (rx, rx)), mode="wrap")
    out = np.zeros_like(f)
    for i in range(taps.shape[0]):
        dy = i - ry
        for j in range(taps.shape[1]):
            t = taps[i, j]
            if t == 0.0:
                continue
            dx = j - rx
            out += t * padded[ry - dy : ry - dy + h, rx - dx : rx - dx + w]
    return out


def apply(kernel: ConvolutionKernel, f: ImageGrid) -> ImageGrid:
    """Periodic convolution ``K f``."""
    return _convolve_periodic(kernel.taps, as_grid(f))


def adjoint(kernel: ConvolutionKernel, f: ImageGrid) -> ImageGrid:
    """Adjoint ``K* f``: convolution with the point-reflected taps.

    Symmetric kernels go through exactly the same arithmetic as :func:`apply`,
    so for them ``adjoint(K, f) == apply(K, f)`` bit for bit.
    """
    return _convolve_periodic(kernel.taps[::-1, ::-1], as_grid(f))


def add_gaussian_noise(f: ImageGrid, noise: NoiseSpec) -> ImageGrid:
    f = as_grid(f)
    if noise.sigma_n == 0:
        return f.copy()
    rng = np.random.Generator(np.random.PCG64(int(noise.seed)))
    return f + noise.sigma_n * rng.standard_normal(f.shape)

"""Gradient-descent deconvolution schemes.

All runners start from ``f_0 = u`` and share one loop:

* classical TV:  f <- f - h (L f + lam K*(K f - u))
* CTV:           f <- f - h (theta**k L f + lam K*(K f - u))
* DGD:           f <- f - h (theta**k L f + lam (K f - u))
* baselines:     f <- f - h (mu P(f) + lam K*(K f - u)),  P = 2f or -2 div grad f

The loop stops as soon as ``||K*(K f_{k+1} - u) - K*(K f_k - u)||_2 <= eps_tol``,
after ``max_iter`` steps, or when ``||f_k||_inf`` exceeds ``diverge_linf``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Literal, Optional

import numpy as np

from . import metrics
from .errors import DeconvError, ParameterError
from .grid import ImageGrid, as_grid, norm, same_shape
from .operators import ConvolutionKernel, adjoint, apply
from .variation import DEFAULT_BETA, curvature_from_gradient, divergence, gradient, gradient_magnitude

TRACE_ROW_CAP = 3000

Penalty = Literal["l2", "h1"]


class Termination(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class SolverConfig:
    h: float = 0.1
    lam: float = 1.0
    theta: float = 0.98
    beta: float = DEFAULT_BETA
    eps_tol: float = 5e-5
    max_iter: int = 3000
    diverge_linf: float = 1e8
    mu: float = 1.0

    def __post_init__(self):
        checks = [
            ("h", self.h > 0),
            ("lam", self.lam >= 0),
            ("theta", 0 < self.theta <= 1),
            ("beta", self.beta > 0),
            ("eps_tol", self.eps_tol > 0),
            ("max_iter", int(self.max_iter) == self.max_iter and self.max_iter >= 0),
            ("diverge_linf", self.diverge_linf > 0),
            ("mu", self.mu >= 0),
        ]
        for name, ok in checks:
            value = getattr(self, name)
            if not ok or (isinstance(value, float) and not math.isfinite(value)):
                raise ParameterError(f"invalid solver parameter {name}={value!r}")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class TraceRow:
    k: int
    tv: float
    l_norm: float
    residual_adj: float
    step_l1: float
    psnr: Optional[float] = None


@dataclass
class SolverResult:
    image: ImageGrid
    trace: list[TraceRow]
    termination: Termination
    iterations: int
    # ||K*(K f_{k+1} - u) - K*(K f_k - u)||_2 at the last step taken (nan if none)
    last_residual_change: float = math.nan
    method: str = ""


def theta_power(theta: float) -> Callable[[int], float]:
    """Relaxation schedule ``k -> theta**k`` with ``theta_0 = 1``."""
    return lambda k: theta**k


def adjoint_residual(K: ConvolutionKernel, f: ImageGrid, u: ImageGrid) -> ImageGrid:
    return adjoint(K, apply(K, f) - u)


def tv_step(
    f: ImageGrid,
    u: ImageGrid,
    K: ConvolutionKernel,
    cfg: SolverConfig,
    theta_k: float,
) -> ImageGrid:
    """One step ``f - h (theta_k L_beta(f) + lam K*(K f - u))``."""
    f = as_grid(f, name="f")
    u = as_grid(u, name="u")
    same_shape(f, u)
    if not 0 <= theta_k <= 1:
        raise ParameterError(f"theta_k must lie in [0, 1], got {theta_k}")
    L = curvature_from_gradient(gradient(f), cfg.beta)
    return f - cfg.h * (theta_k * L + cfg.lam * adjoint_residual(K, f, u))


def stop_check(r_next: ImageGrid, r_prev: ImageGrid, eps_tol: float) -> bool:
    """True when the adjoint residual moved by at most ``eps_tol`` in L2."""
    same_shape(np.asarray(r_next), np.asarray(r_prev))
    return norm(np.asarray(r_next) - np.asarray(r_prev), "l2") <= eps_tol


# A direction maps (k, f, grad f, L_beta f, K f - u, K*(K f - u)) to the update direction.
_Direction = Callable[[int, np.ndarray, object, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _iterate(
    u: ImageGrid,
    K: ConvolutionKernel,
    cfg: SolverConfig,
    direction: _Direction,
    ref: Optional[ImageGrid],
    method: str,
) -> SolverResult:
    u = as_grid(u, name="u")
    if ref is not None:
        ref = as_grid(ref, name="ref")
        same_shape(u, ref)
    stride = max(1, math.ceil(cfg.max_iter / TRACE_ROW_CAP))

    f = u.copy()
    k = 0
    trace: list[TraceRow] = []
    fit = apply(K, f) - u
    r = adjoint(K, fit)
    last_change = math.nan

    def row(k, f, g, L, r, step_l1):
        return TraceRow(
            k=k,
            tv=float(gradient_magnitude(g).sum()),
            l_norm=norm(L, "l1"),
            residual_adj=norm(r, "l1"),
            step_l1=step_l1,
            psnr=None if ref is None else metrics.psnr(f, ref),
        )

    while True:
        g = gradient(f)
        L = curvature_from_gradient(g, cfg.beta)
        if k >= cfg.max_iter:
            trace.append(row(k, f, g, L, r, 0.0))
            termination = Termination.MAX_ITER
            break
        d = direction(k, f, g, L, fit, r)
        f_next = f - cfg.h * d
        step = f_next - f
        linf = float(np.max(np.abs(f_next)))
        if not math.isfinite(linf) or linf > cfg.diverge_linf:
            trace.append(row(k, f, g, L, r, norm(step, "l1")))
            f = f_next
            k += 1
            termination = Termination.DIVERGED
            break
        if k % stride == 0:
            trace.append(row(k, f, g, L, r, norm(step, "l1")))
        fit = apply(K, f_next) - u
        r_next = adjoint(K, fit)
        last_change = norm(r_next - r, "l2")
        f, r = f_next, r_next
        k += 1
        if last_change <= cfg.eps_tol:
            g = gradient(f)
            trace.append(row(k, f, g, curvature_from_gradient(g, cfg.beta), r, 0.0))
            termination = Termination.CONVERGED
            break

    if termination is not Termination.DIVERGED:
        for t in trace:
            if not all(math.isfinite(v) for v in (t.tv, t.l_norm, t.residual_adj, t.step_l1)):
                raise DeconvError(f"non-finite trace entry at k={t.k} without divergence")
    return SolverResult(
        image=f,
        trace=trace,
        termination=termination,
        iterations=k,
        last_residual_change=last_change,
        method=method,
    )


def _ctv_direction(lam: float, schedule: Callable[[int], float]) -> _Direction:
    def direction(k, f, g, L, fit, r):
        return schedule(k) * L + lam * r

    return direction


def run_ctv(
    u: ImageGrid, K: ConvolutionKernel, cfg: SolverConfig, ref: Optional[ImageGrid] = None
) -> SolverResult:
    """Controlled TV: the TV term is damped by ``theta**k``."""
    schedule = theta_power(cfg.theta)
    return _iterate(u, K, cfg, _ctv_direction(cfg.lam, schedule), ref, "ctv")


def run_classical_tv(
    u: ImageGrid, K: ConvolutionKernel, cfg: SolverConfig, ref: Optional[ImageGrid] = None
) -> SolverResult:
    schedule = theta_power(1.0)
    return _iterate(u, K, cfg, _ctv_direction(cfg.lam, schedule), ref, "tv")


def run_dgd(
    u: ImageGrid, K: ConvolutionKernel, cfg: SolverConfig, ref: Optional[ImageGrid] = None
) -> SolverResult:
    """Direct gradient descent: fidelity term ``K f - u`` without the adjoint."""
    schedule = theta_power(cfg.theta)
    lam = cfg.lam

    def direction(k, f, g, L, fit, r):
        return schedule(k) * L + lam * fit

    return _iterate(u, K, cfg, direction, ref, "dgd")


def baseline_penalty(f: ImageGrid, penalty: Penalty) -> ImageGrid:
    """Gradient of ``||f||_2^2`` (l2) or ``||grad f||_2^2`` (h1)."""
    if penalty == "l2":
        return 2.0 * np.asarray(f, dtype=np.float64)
    if penalty == "h1":
        return -2.0 * divergence(gradient(f))
    raise ParameterError(f"unknown penalty {penalty!r}")


def run_baseline(
    u: ImageGrid,
    K: ConvolutionKernel,
    cfg: SolverConfig,
    penalty: Penalty = "l2",
    ref: Optional[ImageGrid] = None,
) -> SolverResult:
    """Tikhonov (l2) or H1/Wiener (h1) regularized least squares by gradient descent."""
    mu, lam = cfg.mu, cfg.lam
    baseline_penalty(np.zeros((1, 1)), penalty)  # validates the name up front

    def direction(k, f, g, L, fit, r):
        return mu * baseline_penalty(f, penalty) + lam * r

    return _iterate(u, K, cfg, direction, ref, penalty)


METHODS = ("ctv", "tv", "dgd", "l2", "h1")


def run_method(
    method: str,
    u: ImageGrid,
    K: ConvolutionKernel,
    cfg: SolverConfig,
    ref: Optional[ImageGrid] = None,
) -> SolverResult:
    if method == "ctv":
        return run_ctv(u, K, cfg, ref)
    if method == "tv":
        return run_classical_tv(u, K, cfg, ref)
    if method == "dgd":
        return run_dgd(u, K, cfg, ref)
    if method in ("l2", "h1"):
        return run_baseline(u, K, cfg, method, ref)
    raise ParameterError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")

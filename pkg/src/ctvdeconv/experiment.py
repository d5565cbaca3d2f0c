"""Experiment configuration, execution and CSV emission.

Config files are flat ``key = value`` lines with ``#`` comments::

    image = shape:128            # or file:path/to/original.pgm
    kernel = gaussian:1          # box:9 | file:taps.txt
    noise_sigma = 0
    seed = 0
    methods = ctv, tv, dgd
    max_iter = 3000
    ctv.theta = 0.98             # per-method override of any solver key
    output_dir = out

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import metrics
from .errors import DeconvError, ParameterError
from .grid import ImageGrid, load_pgm, save_pgm
from .operators import (
    ConvolutionKernel,
    NoiseSpec,
    add_gaussian_noise,
    apply,
    load_kernel,
    make_box_kernel,
    make_gaussian_kernel,
)
from .shapes import generate_shape
from .solvers import METHODS, SolverConfig, SolverResult, Termination, TraceRow, run_method

log = logging.getLogger(__name__)

TRACE_HEADER = ("k", "tv", "l_norm", "residual_adj", "step_l1", "psnr")
SUMMARY_HEADER = ("method", "psnr_db", "iterations", "termination", "wall_time_s")

DEFAULT_THETA = {"gaussian": 0.98, "box": 0.998, "file": 0.98}

# config key -> SolverConfig field
_SOLVER_KEYS = {
    "h": "h",
    "lambda": "lam",
    "theta": "theta",
    "beta": "beta",
    "eps": "eps_tol",
    "max_iter": "max_iter",
    "diverge_linf": "diverge_linf",
    "mu": "mu",
}
_TOP_KEYS = {
    "image",
    "kernel",
    "kernel_normalize",
    "noise_sigma",
    "seed",
    "methods",
    "output_dir",
    "divergence_fatal",
    "predenoised",
}


class ConfigError(DeconvError, ValueError):
    pass


@dataclass(frozen=True)
class ImageSource:
    kind: str  # "shape" | "file"
    size: int = 0
    path: Optional[Path] = None

    def load(self) -> ImageGrid:
        if self.kind == "shape":
            return generate_shape(self.size)
        return load_pgm(self.path)


@dataclass(frozen=True)
class KernelSource:
    kind: str  # "gaussian" | "box" | "file"
    sigma: float = 0.0
    n: int = 0
    path: Optional[Path] = None
    normalize: bool = False

    def build(self) -> ConvolutionKernel:
        if self.kind == "gaussian":
            return make_gaussian_kernel(self.sigma)
        if self.kind == "box":
            return make_box_kernel(self.n)
        return load_kernel(self.path, normalize=self.normalize)

    @property
    def default_theta(self) -> float:
        return DEFAULT_THETA[self.kind]


@dataclass(frozen=True)
class ExperimentSpec:
    image: ImageSource
    kernel: KernelSource
    noise: NoiseSpec
    methods: tuple[str, ...]
    solvers: dict[str, SolverConfig]
    output_dir: Path
    divergence_fatal: bool = False
    predenoised: Optional[Path] = None

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
            if m not in self.solvers:
                raise ConfigError(f"no solver config for method {m!r}")


@dataclass(frozen=True)
class SummaryRow:
    method: str
    psnr_db: float
    iterations: int
    termination: Termination
    wall_time_s: float


@dataclass
class ExperimentOutcome:
    summary: list[SummaryRow]
    results: dict[str, SolverResult] = field(repr=False)
    observed: ImageGrid = field(repr=False)
    original: ImageGrid = field(repr=False)

    @property
    def any_diverged(self) -> bool:
        return any(r.termination is Termination.DIVERGED for r in self.summary)


def parse_image_source(value: str, base: Path) -> ImageSource:
    kind, _, arg = value.partition(":")
    kind = kind.strip()
    arg = arg.strip()
    if kind == "shape":
        try:
            return ImageSource("shape", size=int(arg))
        except ValueError:
            raise ConfigError(f"bad shape size in {value!r}") from None
    if kind == "file" and arg:
        return ImageSource("file", path=base / arg)
    raise ConfigError(f"image must be shape:<size> or file:<path>, got {value!r}")


def parse_kernel_source(value: str, base: Path, normalize: bool = False) -> KernelSource:
    kind, _, arg = value.partition(":")
    kind = kind.strip()
    arg = arg.strip()
    try:
        if kind == "gaussian":
            return KernelSource("gaussian", sigma=float(arg))
        if kind == "box":
            return KernelSource("box", n=int(arg))
    except ValueError:
        raise ConfigError(f"bad kernel parameter in {value!r}") from None
    if kind == "file" and arg:
        return KernelSource("file", path=base / arg, normalize=normalize)
    raise ConfigError(f"kernel must be gaussian:<sigma>, box:<n> or file:<path>, got {value!r}")


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _solver_value(key: str, value: str):
    try:
        return int(value) if key == "max_iter" else float(value)
    except ValueError:
        raise ConfigError(f"bad numeric value for {key}: {value!r}") from None


def parse_config_text(text: str, base: Path = Path(".")) -> ExperimentSpec:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()

    for key in raw:
        name = key.split(".", 1)[-1]
        if key not in _TOP_KEYS and name not in _SOLVER_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if "." in key and key.split(".", 1)[0] not in METHODS:
            raise ConfigError(f"unknown method prefix in {key!r}")

    if "image" not in raw or "kernel" not in raw:
        raise ConfigError("config must set both 'image' and 'kernel'")
    image = parse_image_source(raw["image"], base)
    kernel = parse_kernel_source(
        raw["kernel"], base, _parse_bool(raw.get("kernel_normalize", "false"))
    )
    try:
        noise = NoiseSpec(float(raw.get("noise_sigma", "0")), int(raw.get("seed", "0")))
    except (ValueError, ParameterError) as exc:
        raise ConfigError(f"bad noise settings: {exc}") from None
    methods = tuple(m.strip() for m in raw.get("methods", "ctv").split(",") if m.strip())

    shared = {"theta": kernel.default_theta}
    for key, fld in _SOLVER_KEYS.items():
        if key in raw:
            shared[fld] = _solver_value(key, raw[key])
    solvers = {}
    for m in methods:
        params = dict(shared)
        for key, fld in _SOLVER_KEYS.items():
            if f"{m}.{key}" in raw:
                params[fld] = _solver_value(key, raw[f"{m}.{key}"])
        try:
            solvers[m] = SolverConfig(**params)
        except ParameterError as exc:
            raise ConfigError(f"method {m}: {exc}") from None

    predenoised = base / raw["predenoised"] if raw.get("predenoised") else None
    return ExperimentSpec(
        image=image,
        kernel=kernel,
        noise=noise,
        methods=methods,
        solvers=solvers,
        output_dir=base / raw.get("output_dir", "out"),
        divergence_fatal=_parse_bool(raw.get("divergence_fatal", "false")),
        predenoised=predenoised,
    )


def load_config(path) -> ExperimentSpec:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), base=path.parent)


# --- CSV --------------------------------------------------------------------


def _fmt(v: float) -> str:
    # repr gives the shortest round-tripping form (up to 17 significant digits)
    return repr(float(v))


def write_trace_csv(trace: Sequence[TraceRow], path) -> None:
    if not trace:
        raise ValueError("cannot write an empty trace")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow(
                [r.k, _fmt(r.tv), _fmt(r.l_norm), _fmt(r.residual_adj), _fmt(r.step_l1), metrics.format_db(r.psnr)]
            )


def read_trace_csv(path) -> list[TraceRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        rows = []
        for rec in reader:
            psnr = None if rec[5] == "" else float(rec[5])
            rows.append(TraceRow(int(rec[0]), float(rec[1]), float(rec[2]), float(rec[3]), float(rec[4]), psnr))
    return rows


def write_summary_csv(rows: Iterable[SummaryRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            w.writerow([r.method, metrics.format_db(r.psnr_db), r.iterations, r.termination.value, f"{r.wall_time_s:.3f}"])


# --- execution ----------------------------------------------------------------


def _run_one(method: str, u: ImageGrid, kernel: ConvolutionKernel, cfg: SolverConfig, ref: ImageGrid):
    start = time.monotonic()
    result = run_method(method, u, kernel, cfg, ref)
    return result, time.monotonic() - start


def prepare_inputs(spec: ExperimentSpec) -> tuple[ImageGrid, ConvolutionKernel, ImageGrid]:
    """Return (original, kernel, observed u)."""
    original = spec.image.load()
    kernel = spec.kernel.build()
    if spec.predenoised is not None:
        u = load_pgm(spec.predenoised)
        if u.shape != original.shape:
            raise ConfigError(f"predenoised image shape {u.shape} differs from original {original.shape}")
    else:
        u = add_gaussian_noise(apply(kernel, original), spec.noise)
    return original, kernel, u


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentOutcome:
    """Blur (and optionally noise) the original, deblur with each method, write outputs.

    Writes ``original.pgm``, ``observed.pgm``, ``<method>.pgm``,
    ``<method>_trace.csv`` and ``summary.csv`` under ``spec.output_dir``.
    """
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")
    original, kernel, u = prepare_inputs(spec)
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_pgm(original, out / "original.pgm")
    save_pgm(u, out / "observed.pgm")

    args = [(m, u, kernel, spec.solvers[m], original) for m in spec.methods]
    if jobs == 1 or len(args) == 1:
        runs = [_run_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            runs = list(pool.map(_run_one, *zip(*args)))

    summary = []
    results = {}
    for method, (result, wall) in zip(spec.methods, runs):
        results[method] = result
        if result.termination is Termination.DIVERGED:
            log.warning("%s diverged after %d iterations", method, result.iterations)
        quality = metrics.psnr(result.image, original)
        summary.append(SummaryRow(method, quality, result.iterations, result.termination, wall))
        save_pgm(np.nan_to_num(result.image, nan=0.0, posinf=255.0, neginf=0.0), out / f"{method}.pgm")
        write_trace_csv(result.trace, out / f"{method}_trace.csv")
    write_summary_csv(summary, out / "summary.csv")
    return ExperimentOutcome(summary=summary, results=results, observed=u, original=original)

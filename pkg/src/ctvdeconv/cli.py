"""Command-line entry point: ``ctvdeconv generate|blur|deblur|psnr|experiment``.

Exit codes: 0 success, 2 bad arguments or config, 3 I/O or parse failure,
4 solver diverged when divergence is marked fatal.
"""

from __future__ import annotations

import functools
import logging
import math
from pathlib import Path

import click

from . import experiment, metrics
from .errors import DimensionError, ParameterError, PGMError
from .grid import load_pgm, save_pgm
from .operators import NoiseSpec, add_gaussian_noise, apply
from .shapes import generate_shape
from .solvers import METHODS, SolverConfig, Termination, run_method

EXIT_BAD_ARGS = 2
EXIT_IO = 3
EXIT_DIVERGED = 4


class CLIError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _io_guard(fn):
    """Map I/O and parse failures to exit code 3, parameter errors to 2."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (OSError, PGMError) as exc:
            raise CLIError(str(exc), EXIT_IO) from exc
        except (ParameterError, DimensionError, experiment.ConfigError) as exc:
            raise CLIError(str(exc), EXIT_BAD_ARGS) from exc

    return wrapper


def kernel_options(fn):
    fn = click.option("--normalize-taps", is_flag=True, help="Rescale file taps to unit sum.")(fn)
    fn = click.option("--taps", type=click.Path(dir_okay=False), help="Tap file for --kernel file.")(fn)
    fn = click.option("--n", "box_n", type=int, help="Box size (odd) for --kernel box.")(fn)
    fn = click.option("--sigma", type=float, help="Gaussian standard deviation for --kernel gaussian.")(fn)
    fn = click.option(
        "--kernel", "kernel_kind", type=click.Choice(["gaussian", "box", "file"]), required=True
    )(fn)
    return fn


def _kernel_source(kind, sigma, box_n, taps, normalize_taps) -> experiment.KernelSource:
    if kind == "gaussian":
        if sigma is None:
            raise click.UsageError("--kernel gaussian requires --sigma")
        return experiment.KernelSource("gaussian", sigma=sigma)
    if kind == "box":
        if box_n is None:
            raise click.UsageError("--kernel box requires --n")
        return experiment.KernelSource("box", n=box_n)
    if taps is None:
        raise click.UsageError("--kernel file requires --taps")
    return experiment.KernelSource("file", path=Path(taps), normalize=normalize_taps)


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool):
    """Total-variation deconvolution toolkit (CTV, classical TV, DGD, Tikhonov/H1)."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.group()
def generate():
    """Generate synthetic test images."""


@generate.command("shape")
@click.option("--size", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_io_guard
def generate_shape_cmd(size: int, out: str):
    """Write the deterministic geometric test image."""
    save_pgm(generate_shape(size), out)


@main.command()
@kernel_options
@click.option("--noise-sigma", type=float, default=0.0, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_io_guard
def blur(kernel_kind, sigma, box_n, taps, normalize_taps, noise_sigma, seed, in_path, out):
    """Blur an image with K and optionally add seeded Gaussian noise."""
    kernel = _kernel_source(kernel_kind, sigma, box_n, taps, normalize_taps).build()
    f = load_pgm(in_path)
    save_pgm(add_gaussian_noise(apply(kernel, f), NoiseSpec(noise_sigma, seed)), out)


@main.command()
@click.option("--method", type=click.Choice(METHODS), default="ctv", show_default=True)
@click.option("--h", type=float, default=0.1, show_default=True)
@click.option("--lambda", "lam", type=float, default=1.0, show_default=True)
@click.option("--theta", type=float, default=None, help="Default: 0.98 (gaussian/file), 0.998 (box).")
@click.option("--beta", type=float, default=1e-3, show_default=True)
@click.option("--eps", type=float, default=5e-5, show_default=True)
@click.option("--max-iter", type=int, default=3000, show_default=True)
@click.option("--mu", type=float, default=1.0, show_default=True, help="Penalty weight for l2/h1.")
@click.option("--diverge-linf", type=float, default=1e8, show_default=True)
@click.option("--fail-on-diverge", is_flag=True, help="Exit with code 4 if the run diverges.")
@kernel_options
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--ref", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--trace", type=click.Path(dir_okay=False), default=None)
@_io_guard
def deblur(
    method, h, lam, theta, beta, eps, max_iter, mu, diverge_linf, fail_on_diverge,
    kernel_kind, sigma, box_n, taps, normalize_taps, in_path, ref, out, trace,
):
    """Deconvolve an observed image u, starting from f_0 = u."""
    source = _kernel_source(kernel_kind, sigma, box_n, taps, normalize_taps)
    cfg = SolverConfig(
        h=h, lam=lam, theta=source.default_theta if theta is None else theta, beta=beta,
        eps_tol=eps, max_iter=max_iter, diverge_linf=diverge_linf, mu=mu,
    )
    u = load_pgm(in_path)
    reference = load_pgm(ref) if ref else None
    result = run_method(method, u, source.build(), cfg, reference)
    save_pgm(result.image, out)
    if trace:
        experiment.write_trace_csv(result.trace, trace)
    line = f"method={method} iterations={result.iterations} termination={result.termination.value}"
    if reference is not None:
        line += f" PSNR={_db(metrics.psnr(result.image, reference))}db"
    click.echo(line)
    if fail_on_diverge and result.termination is Termination.DIVERGED:
        raise CLIError(f"{method} diverged after {result.iterations} iterations", EXIT_DIVERGED)


def _db(value: float) -> str:
    return metrics.format_db(value) if math.isinf(value) else f"{value:.4f}"


@main.command()
@click.argument("a", type=click.Path(dir_okay=False))
@click.argument("b", type=click.Path(dir_okay=False))
@_io_guard
def psnr(a, b):
    """Print the PSNR between two PGM images."""
    click.echo(f"PSNR={_db(metrics.psnr(load_pgm(a), load_pgm(b)))}db")


@main.command("experiment")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@_io_guard
def experiment_cmd(config_path, jobs):
    """Run every configured method and write restored images, traces and a summary."""
    spec = experiment.load_config(config_path)
    outcome = experiment.run_experiment(spec, jobs=jobs)
    for row in outcome.summary:
        click.echo(
            f"{row.method:4s} PSNR={_db(row.psnr_db)}db iterations={row.iterations} "
            f"termination={row.termination.value} time={row.wall_time_s:.3f}s"
        )
    if spec.divergence_fatal and outcome.any_diverged:
        raise CLIError("a solver diverged", EXIT_DIVERGED)


if __name__ == "__main__":
    main()

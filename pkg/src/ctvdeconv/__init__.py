"""Controlled total variation (CTV) deconvolution and its comparators."""

from .errors import DeconvError, DimensionError, ParameterError, PGMError
from .grid import VectorField, constant, norm, read_pgm, write_pgm
from .metrics import mse, psnr
from .operators import (
    ConvolutionKernel,
    NoiseSpec,
    add_gaussian_noise,
    adjoint,
    apply,
    identity_kernel,
    make_box_kernel,
    make_gaussian_kernel,
)
from .shapes import generate_shape
from .solvers import (
    SolverConfig,
    SolverResult,
    Termination,
    TraceRow,
    run_baseline,
    run_classical_tv,
    run_ctv,
    run_dgd,
    stop_check,
    tv_step,
)
from .variation import curvature, divergence, gradient, smoothed_tv, total_variation

__version__ = "0.1.0"

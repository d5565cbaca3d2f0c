import math
from pathlib import Path

import numpy as np
import pytest

from ctvdeconv import metrics
from ctvdeconv.experiment import (
    ConfigError,
    SUMMARY_HEADER,
    TRACE_HEADER,
    load_config,
    parse_config_text,
    read_trace_csv,
    run_experiment,
    write_trace_csv,
)
from ctvdeconv.grid import load_pgm, save_pgm
from ctvdeconv.operators import apply, make_gaussian_kernel
from ctvdeconv.shapes import generate_shape
from ctvdeconv.solvers import Termination, TraceRow

BASIC = """
# small smoke experiment
image = shape:32
kernel = gaussian:1
noise_sigma = 2.5
seed = 7
methods = ctv, tv, dgd, l2, h1
max_iter = 15
ctv.theta = 0.9
output_dir = out
"""


def test_parse_config(tmp_path):
    spec = parse_config_text(BASIC, tmp_path)
    assert spec.methods == ("ctv", "tv", "dgd", "l2", "h1")
    assert spec.solvers["ctv"].theta == 0.9
    assert spec.solvers["tv"].theta == 0.98
    assert spec.solvers["dgd"].max_iter == 15
    assert spec.noise.sigma_n == 2.5 and spec.noise.seed == 7
    assert spec.output_dir == tmp_path / "out"


def test_default_theta_per_kernel_family(tmp_path):
    spec = parse_config_text("image = shape:32\nkernel = box:9\nmethods = dgd\n", tmp_path)
    assert spec.solvers["dgd"].theta == 0.998


@pytest.mark.parametrize(
    "text",
    [
        "kernel = box:9\n",
        "image = shape:32\nkernel = box:9\nmethods = \n",
        "image = shape:32\nkernel = box:9\nmethods = foo\n",
        "image = shape:32\nkernel = box:9\nbogus = 1\n",
        "image = shape:32\nkernel = box:9\nfoo.h = 1\n",
        "image = shape:32\nkernel = box:9\nh = abc\n",
        "image = shape:32\nkernel = box:9\nh = -1\n",
        "image = circle:32\nkernel = box:9\n",
        "image = shape:32\nkernel = motion:3\n",
        "image = shape:32\nkernel = box:9\nh = 1\nh = 2\n",
        "image = shape:32\nkernel box:9\n",
    ],
)
def test_config_errors(text, tmp_path):
    with pytest.raises(ConfigError):
        parse_config_text(text, tmp_path)


def test_trace_csv_roundtrip(tmp_path):
    rows = [
        TraceRow(0, 1.0 / 3.0, 2.5e-17, 123456.789012345678, 0.1, 31.123456789012345),
        TraceRow(1, 7.0, 8.0, 9.0, 0.0, math.inf),
    ]
    path = tmp_path / "t.csv"
    write_trace_csv(rows, path)
    assert read_trace_csv(path) == rows
    assert path.read_text().splitlines()[0] == ",".join(TRACE_HEADER)
    assert path.read_text().splitlines()[2].endswith(",inf")


def test_trace_csv_single_row_without_psnr(tmp_path):
    path = tmp_path / "t.csv"
    write_trace_csv([TraceRow(0, 1.0, 2.0, 3.0, 0.0)], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].endswith(",") and len(lines[1].split(",")) == 6


def test_trace_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_trace_csv([], tmp_path / "t.csv")


def test_run_experiment_outputs(tmp_path):
    spec = parse_config_text(BASIC, tmp_path)
    outcome = run_experiment(spec)
    out = tmp_path / "out"
    assert [r.method for r in outcome.summary] == list(spec.methods)
    for row in outcome.summary:
        assert (out / f"{row.method}.pgm").exists()
        trace = read_trace_csv(out / f"{row.method}_trace.csv")
        assert len(trace) == row.iterations + 1
        result = outcome.results[row.method]
        assert row.psnr_db == metrics.psnr(result.image, outcome.original)
        # the emitted PGM is the quantized counterpart of the in-memory result
        assert np.array_equal(load_pgm(out / f"{row.method}.pgm"), np.clip(np.floor(result.image + 0.5), 0, 255))
    header = (out / "summary.csv").read_text().splitlines()[0]
    assert header == ",".join(SUMMARY_HEADER)
    assert np.array_equal(load_pgm(out / "original.pgm"), generate_shape(32))


def test_zero_iterations_passthrough(tmp_path):
    spec = parse_config_text("image = shape:48\nkernel = gaussian:1\nmethods = ctv\nmax_iter = 0\n", tmp_path)
    outcome = run_experiment(spec)
    original = generate_shape(48)
    u = apply(make_gaussian_kernel(1.0), original)
    assert np.array_equal(outcome.results["ctv"].image, u)
    assert outcome.summary[0].psnr_db == metrics.psnr(u, original)


def test_divergence_reported_not_raised(tmp_path):
    spec = parse_config_text(
        "image = shape:32\nkernel = box:9\nmethods = dgd\ndiverge_linf = 1e4\n", tmp_path
    )
    outcome = run_experiment(spec)
    assert outcome.summary[0].termination is Termination.DIVERGED
    assert outcome.any_diverged
    assert (tmp_path / "out" / "dgd_trace.csv").exists()


def test_predenoised_input(tmp_path):
    original = generate_shape(32)
    u = apply(make_gaussian_kernel(1.0), original)
    save_pgm(u, tmp_path / "u.pgm")
    spec = parse_config_text(
        "image = shape:32\nkernel = gaussian:1\nnoise_sigma = 50\npredenoised = u.pgm\nmax_iter = 0\n", tmp_path
    )
    outcome = run_experiment(spec)
    assert np.array_equal(outcome.observed, load_pgm(tmp_path / "u.pgm"))


def _outputs(out: Path):
    files = {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "summary.csv"}
    # wall time is the last summary column and is excluded from determinism
    summary = [line.rsplit(",", 1)[0] for line in (out / "summary.csv").read_text().splitlines()]
    return files, summary


def test_determinism_across_jobs(tmp_path):
    for name, jobs in (("a", 1), ("b", 1), ("c", 3)):
        d = tmp_path / name
        d.mkdir()
        (d / "exp.cfg").write_text(BASIC)
        run_experiment(load_config(d / "exp.cfg"), jobs=jobs)
    a, b, c = (_outputs(tmp_path / n / "out") for n in "abc")
    assert a == b == c

import math

import numpy as np
import pytest

from ctvdeconv.errors import DimensionError
from ctvdeconv.metrics import format_db, mse, psnr, quality


def test_mse_values(rng):
    f = rng.normal(size=(4, 4))
    assert mse(f, f) == 0
    assert mse(f + 1.0, f) == pytest.approx(1.0)
    assert mse(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == 12.5


def test_psnr_values(rng):
    f = rng.uniform(0, 255, size=(5, 5))
    assert psnr(f, f) == math.inf
    assert psnr(f + 1.0, f) == pytest.approx(48.1308, abs=1e-3)
    assert psnr(np.zeros((3, 3)), np.full((3, 3), 255.0)) == 0.0


def test_quality_report_sentinel(rng):
    f = rng.normal(size=(3, 3))
    assert quality(f, f).psnr_db == math.inf and quality(f, f).mse == 0
    r = quality(f, f + 2)
    assert r.mse == pytest.approx(4) and math.isfinite(r.psnr_db)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        mse(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        psnr(np.zeros((2, 2)), np.zeros((3, 2)))


def test_psnr_symmetry_and_shift(rng):
    a, b = rng.integers(0, 256, size=(2, 6, 6)).astype(float)
    assert psnr(a, b) == psnr(b, a)
    assert psnr(a + 64.0, b + 64.0) == psnr(a, b)


def test_psnr_decreases_with_mse(rng):
    f = rng.uniform(0, 255, size=(8, 8))
    noise = rng.normal(size=f.shape)
    values = [psnr(f + s * noise, f) for s in (0.1, 0.5, 1, 5, 20)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_format_db():
    assert format_db(math.inf) == "inf"
    assert format_db(None) == ""
    assert float(format_db(31.123456789012345)) == 31.123456789012345

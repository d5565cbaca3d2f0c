import numpy as np
import pytest

from ctvdeconv.errors import ParameterError
from ctvdeconv.shapes import LEVELS, generate_shape
from ctvdeconv.variation import total_variation


def test_paper_size():
    assert generate_shape(150).shape == (150, 150)


def test_deterministic():
    assert np.array_equal(generate_shape(128), generate_shape(128))


@pytest.mark.parametrize("size", [32, 64, 128, 150, 256])
def test_exactly_five_levels(size):
    assert tuple(np.unique(generate_shape(size))) == LEVELS


@pytest.mark.parametrize("size", [64, 100, 128, 200, 256])
def test_tv_edge_perimeter_bound(size):
    assert total_variation(generate_shape(size)) / size <= 5 * 255


def test_piecewise_constant():
    f = generate_shape(128)
    g = np.hypot(*np.gradient(f))
    # most pixels sit in flat regions
    assert (g == 0).mean() > 0.8


@pytest.mark.parametrize("size", [31, 0, -5, 40.5])
def test_rejects_small(size):
    with pytest.raises(ParameterError):
        generate_shape(size)

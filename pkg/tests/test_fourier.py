import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deconwave.fourier import CoverageError, FourierSeries


def test_from_samples_recovers_trig_polynomial():
    t = np.arange(64) / 64
    x = 1.5 + np.cos(2 * np.pi * 3 * t) - 2 * np.sin(2 * np.pi * 5 * t)
    fs = FourierSeries.from_samples(x, 10)
    assert fs.at(0) == pytest.approx(1.5)
    assert fs.at(3) == pytest.approx(0.5)
    assert fs.at(5) == pytest.approx(1j)
    assert fs.at(-5) == pytest.approx(-1j)
    np.testing.assert_allclose(fs.to_grid(64), x, atol=1e-13)


def test_out_of_band_access_raises():
    fs = FourierSeries.zeros(4)
    with pytest.raises(CoverageError, match="outside band"):
        fs.at([3, 7])
    with pytest.raises(CoverageError, match="missing 5..9"):
        fs.require(9)
    with pytest.raises(CoverageError):
        fs.to_grid(8)


def test_derivative_matches_closed_form():
    fs = FourierSeries.from_mapping({4: 0.5, -4: 0.5})  # cos(8 pi t)
    t = np.linspace(0, 1, 37)
    np.testing.assert_allclose(fs.derivative(1).evaluate(t).real,
                               -8 * np.pi * np.sin(8 * np.pi * t), atol=1e-11)
    np.testing.assert_allclose(fs.derivative(2).evaluate(t).real,
                               -(8 * np.pi) ** 2 * np.cos(8 * np.pi * t), atol=1e-9)


def test_pad_truncate_roundtrip():
    fs = FourierSeries.from_mapping({1: 2.0, -1: 2.0, 0: 1.0})
    assert fs.pad(6).nmax == 6
    np.testing.assert_array_equal(fs.pad(6).truncate(1).coef, fs.coef)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-3, 3))
def test_arithmetic_is_linear(vals, c):
    a = FourierSeries(np.array(vals, dtype=complex))
    b = FourierSeries(np.array(vals[::-1], dtype=complex))
    np.testing.assert_allclose((a + b * c).coef, a.coef + c * b.coef)
    np.testing.assert_allclose((a - a).coef, 0)

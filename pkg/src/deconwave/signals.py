"""Test functions with analytic derivatives, and quality metrics.

Closed forms (all 1-periodic on [0, 1]):

* Wave: ``0.5 + 0.2 cos(4 pi t) + 0.1 cos(24 pi t)``.
* Parabolas: ``0.8 + sum_c a_c (t - c)_+^2`` with knots
  ``c = .1 .2 .3 .35 .37 .41 .43 .5 .7 .9`` and weights
  ``a = -30 60 -30 500 -1000 1000 -500 7.5 -15 7.5``.  The weights sum to
  zero, so the function and its first derivative match at the wrap, while
  the second derivative is piecewise constant and jumps at every knot.
* TimeShiftedSine: ``0.3 sin(3 pi (h(t) + t)) + 0.5`` where ``h`` is the
  four-fold composition of ``g(x) = (1 - cos(pi x)) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fourier import FourierSeries

__all__ = [
    "MetricReport",
    "TestFunction",
    "TEST_FUNCTIONS",
    "metric_report",
    "mise",
    "psnr",
    "test_function",
]

MAX_ORDER = 2


@dataclass(frozen=True)
class TestFunction:
    """A named periodic test function.

    ``band_tolerance`` bounds the sup-norm gap between ``eval`` and the
    Fourier series truncated to ``|l| < 2048`` on a 4096-point grid.
    """

    __test__ = False  # not a pytest class

    name: str
    _eval: Callable
    _fourier: Callable
    band_tolerance: float
    knots: tuple = ()

    def eval(self, t):
        return self.derivative_eval(t, 0)

    def derivative_eval(self, t, order: int = 0):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"derivative order must be in 0..{MAX_ORDER}")
        return self._eval(np.asarray(t, dtype=float), order)

    def __call__(self, t):
        return self.eval(t)

    def fourier(self, nmax: int) -> FourierSeries:
        return self._fourier(nmax)

    def sample(self, grid_size: int, order: int = 0) -> np.ndarray:
        return self.derivative_eval(np.arange(grid_size) / grid_size, order)


def _wave_eval(t, order):
    w1, w2 = 4 * np.pi, 24 * np.pi
    if order == 0:
        return 0.5 + 0.2 * np.cos(w1 * t) + 0.1 * np.cos(w2 * t)
    if order == 1:
        return -0.2 * w1 * np.sin(w1 * t) - 0.1 * w2 * np.sin(w2 * t)
    return -0.2 * w1**2 * np.cos(w1 * t) - 0.1 * w2**2 * np.cos(w2 * t)


def _wave_fourier(nmax):
    terms = {0: 0.5, 2: 0.1, -2: 0.1, 12: 0.05, -12: 0.05}
    return FourierSeries.from_mapping({l: v for l, v in terms.items() if abs(l) <= nmax}, nmax)


PARABOLA_KNOTS = np.array([0.1, 0.2, 0.3, 0.35, 0.37, 0.41, 0.43, 0.5, 0.7, 0.9])
PARABOLA_WEIGHTS = np.array([-30.0, 60.0, -30.0, 500.0, -1000.0, 1000.0, -500.0, 7.5, -15.0, 7.5])


def _parabolas_eval(t, order):
    t = np.mod(t, 1.0)
    r = np.subtract.outer(t, PARABOLA_KNOTS)
    pos = r > 0
    if order == 0:
        return 0.8 + np.where(pos, r**2, 0.0) @ PARABOLA_WEIGHTS
    if order == 1:
        return np.where(pos, 2 * r, 0.0) @ PARABOLA_WEIGHTS
    return pos.astype(float) @ (2 * PARABOLA_WEIGHTS)


def _parabolas_fourier(nmax):
    # f'' is a step function; since sum(a) = 0 and f, f' are periodic,
    # FT(f)(l) = sum_c 2 a_c exp(-2 pi i l c) / (2 pi i l)^3 for l != 0.
    ell = np.arange(-nmax, nmax + 1)
    nz = ell != 0
    coef = np.zeros(ell.size, dtype=complex)
    phases = np.exp(-2j * np.pi * np.multiply.outer(ell[nz], PARABOLA_KNOTS))
    coef[nz] = (phases @ (2 * PARABOLA_WEIGHTS)) / (2j * np.pi * ell[nz]) ** 3
    coef[nmax] = 0.8 + np.sum(PARABOLA_WEIGHTS * (1 - PARABOLA_KNOTS) ** 3 / 3)
    return FourierSeries(coef)


def _tss_eval(t, order):
    # forward-mode chain rule through the four-fold composition
    u, du, ddu = t, np.ones_like(t), np.zeros_like(t)
    for _ in range(4):
        s, c = np.sin(np.pi * u), np.cos(np.pi * u)
        u, du, ddu = (1 - c) / 2, 0.5 * np.pi * s * du, 0.5 * np.pi**2 * c * du**2 + 0.5 * np.pi * s * ddu
    phase = 3 * np.pi * (u + t)
    dphase = 3 * np.pi * (du + 1)
    ddphase = 3 * np.pi * ddu
    if order == 0:
        return 0.3 * np.sin(phase) + 0.5
    if order == 1:
        return 0.3 * np.cos(phase) * dphase
    return -0.3 * np.sin(phase) * dphase**2 + 0.3 * np.cos(phase) * ddphase


def _tss_fourier(nmax):
    grid = max(1 << 16, 1 << int(math.ceil(math.log2(8 * nmax + 2))))
    return FourierSeries.from_function(lambda t: _tss_eval(t, 0), nmax, grid)


TEST_FUNCTIONS = {
    "Wave": TestFunction("Wave", _wave_eval, _wave_fourier, 1e-12),
    "Parabolas": TestFunction("Parabolas", _parabolas_eval, _parabolas_fourier, 2e-5,
                              tuple(PARABOLA_KNOTS)),
    "TimeShiftedSine": TestFunction("TimeShiftedSine", _tss_eval, _tss_fourier, 1e-10),
}


def test_function(name: str) -> TestFunction:
    """Look up a test function by name (case-insensitive)."""
    for key, fn in TEST_FUNCTIONS.items():
        if key.lower() == name.lower():
            return fn
    raise ValueError(f"unknown test function {name!r}; expected one of {list(TEST_FUNCTIONS)}")


test_function.__test__ = False


def psnr(estimate, truth) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the estimate is exact."""
    est = np.asarray(estimate, dtype=float)
    ref = np.asarray(truth, dtype=float)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {ref.shape}")
    if ref.size == 0:
        raise ValueError("empty signal")
    peak = np.max(np.abs(ref)) ** 2
    if peak == 0:
        raise ValueError("truth is identically zero")
    err = np.mean((est - ref) ** 2)
    if err == 0:
        return math.inf
    return float(10 * np.log10(peak / err))


def mise(estimates, truth) -> float:
    """Average over replications of the grid mean squared error."""
    ref = np.asarray(truth, dtype=float)
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    if est.shape[1:] != ref.shape:
        raise ValueError("each estimate must match the truth's shape")
    return float(np.mean(np.mean((est - ref) ** 2, axis=1)))


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    mise: float
    per_replication: tuple


def metric_report(estimates, truth) -> MetricReport:
    """Mean PSNR across replications plus the MISE."""
    values = tuple(psnr(e, truth) for e in estimates)
    return MetricReport(float(np.mean(values)), mise(estimates, truth), values)

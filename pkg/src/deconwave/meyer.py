"""Periodized Meyer wavelets, handled entirely in the Fourier domain.

The periodized atoms have Fourier coefficients

    FT(phi_{j,k})(l) = 2^{-j/2} exp(-2 pi i l k / 2^j) phi_hat(2 pi l / 2^j)

(and likewise for psi), so analysis and synthesis reduce to sums over the
finite sets of frequencies where the window is nonzero.  Those sums are
folded modulo ``2^j`` and finished with a length ``2^j`` FFT, which is an
exact rewrite of the direct double sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betainc

from .fourier import CoverageError, FourierSeries

__all__ = [
    "MeyerWindow",
    "SupportSets",
    "WaveletCoeffs",
    "analyze",
    "auxiliary_ramp",
    "meyer_phi_hat",
    "meyer_psi_hat",
    "periodized_basis_fourier",
    "support_sets",
    "synthesize",
    "synthesize_fourier",
]

TWO_PI = 2.0 * np.pi


def auxiliary_ramp(x, degree: int = 3) -> np.ndarray:
    """Meyer auxiliary function nu on [0, 1], clipped outside.

    ``nu(x) + nu(1 - x) = 1`` and the first ``degree`` derivatives vanish at
    both ends.  For ``degree=3`` this is ``x^4 (35 - 84x + 70x^2 - 20x^3)``.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return betainc(degree + 1, degree + 1, x)


def _rise(x, degree):
    # sin(pi/2 nu(x)): 0 at x<=0, 1 at x>=1
    return np.sin(0.5 * np.pi * auxiliary_ramp(x, degree))


def meyer_phi_hat(omega, degree: int = 3):
    """Fourier transform of the Meyer scaling function (real, even)."""
    a = np.abs(np.asarray(omega, dtype=float))
    # falling edge written as a rise in 2 - x keeps full precision near 4pi/3
    out = np.where(
        a <= TWO_PI / 3,
        1.0,
        np.where(a < 2 * TWO_PI / 3, _rise(2.0 - 3.0 * a / TWO_PI, degree), 0.0),
    )
    return out if out.ndim else float(out)


def meyer_psi_hat_modulus(omega, degree: int = 3):
    a = np.abs(np.asarray(omega, dtype=float))
    out = np.where(
        (a > TWO_PI / 3) & (a <= 2 * TWO_PI / 3),
        _rise(3.0 * a / TWO_PI - 1.0, degree),
        np.where(
            (a > 2 * TWO_PI / 3) & (a < 4 * TWO_PI / 3),
            _rise(2.0 - 3.0 * a / (2 * TWO_PI), degree),
            0.0,
        ),
    )
    return out if out.ndim else float(out)


def meyer_psi_hat(omega, degree: int = 3):
    """Fourier transform of the Meyer wavelet, ``exp(-i omega/2) |psi_hat|``."""
    omega = np.asarray(omega, dtype=float)
    out = np.exp(-0.5j * omega) * meyer_psi_hat_modulus(omega, degree)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class MeyerWindow:
    """Meyer window pair with a fixed auxiliary polynomial degree."""

    auxiliary_degree: int = 3

    def __post_init__(self):
        if self.auxiliary_degree < 0:
            raise ValueError("auxiliary_degree must be >= 0")

    def phi_hat(self, omega):
        return meyer_phi_hat(omega, self.auxiliary_degree)

    def psi_hat(self, omega):
        return meyer_psi_hat(omega, self.auxiliary_degree)

    def window(self, omega, kind: str):
        if kind == "father":
            return self.phi_hat(omega)
        if kind == "mother":
            return self.psi_hat(omega)
        raise ValueError(f"kind must be 'father' or 'mother', got {kind!r}")


@dataclass(frozen=True)
class SupportSets:
    """Integer frequencies where the level-``j`` father/mother atoms are nonzero."""

    level: int
    approx_freqs: np.ndarray
    detail_freqs: np.ndarray


@lru_cache(maxsize=64)
def _support(j: int, degree: int):
    scale = 2.0**j
    lmax = int(np.ceil(4 * scale / 3)) + 1
    ell = np.arange(-lmax, lmax + 1)
    w = TWO_PI * ell / scale
    approx = ell[meyer_phi_hat(w, degree) != 0]
    detail = ell[meyer_psi_hat_modulus(w, degree) != 0]
    approx.setflags(write=False)
    detail.setflags(write=False)
    return approx, detail


def support_sets(j: int, auxiliary_degree: int = 3) -> SupportSets:
    """Exact supports ``D_j`` (father) and ``C_j`` (mother) at level ``j``.

    ``D_j = {l : |l| < 2^{j+1}/3}`` and ``C_j = {l : 2^j/3 < |l| < 2^{j+2}/3}``;
    membership is read off the window values, which vanish exactly outside
    their closed supports.
    """
    if j < 0:
        raise ValueError("level must be >= 0")
    approx, detail = _support(int(j), int(auxiliary_degree))
    return SupportSets(int(j), approx, detail)


def band_limit(j1: int, j2: int, auxiliary_degree: int = 3) -> int:
    """Largest ``|l|`` touched by levels ``j1..j2``."""
    s1 = support_sets(j1, auxiliary_degree)
    top = int(np.abs(s1.approx_freqs).max())
    if j2 >= j1:
        top = max(top, int(np.abs(support_sets(j2, auxiliary_degree).detail_freqs).max()))
    return top


def periodized_basis_fourier(j: int, k: int, ell, kind: str = "mother", auxiliary_degree: int = 3):
    """``FT(phi_{j,k})(l)`` or ``FT(psi_{j,k})(l)`` of the periodized atom."""
    if j < 0:
        raise ValueError("level must be >= 0")
    if not 0 <= k < 2**j:
        raise ValueError(f"translate k={k} outside [0, {2**j})")
    ell = np.asarray(ell, dtype=float)
    scale = 2.0**j
    win = MeyerWindow(auxiliary_degree).window(TWO_PI * ell / scale, kind)
    out = scale**-0.5 * np.exp(-2j * np.pi * ell * k / scale) * win
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class WaveletCoeffs:
    """Approximation coefficients at ``j1`` and details for ``j1..j2``.

    ``beta[i]`` holds level ``j1 + i`` and has length ``2**(j1 + i)``.
    """

    j1: int
    j2: int
    alpha: np.ndarray
    beta: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.j1 < 0 or self.j2 < self.j1 - 1:
            raise ValueError(f"invalid level range j1={self.j1}, j2={self.j2}")
        alpha = np.asarray(self.alpha, dtype=complex)
        if alpha.shape != (2**self.j1,):
            raise ValueError(f"alpha must have length 2**j1 = {2**self.j1}")
        beta = tuple(np.asarray(b, dtype=complex) for b in self.beta)
        if len(beta) != self.j2 - self.j1 + 1:
            raise ValueError("beta must hold one vector per level j1..j2")
        for j, b in zip(self.levels, beta):
            if b.shape != (2**j,):
                raise ValueError(f"level {j} detail vector must have length {2**j}")
            b.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def levels(self) -> range:
        return range(self.j1, self.j2 + 1)

    def detail(self, j: int) -> np.ndarray:
        if j not in self.levels:
            raise KeyError(f"level {j} not in {self.j1}..{self.j2}")
        return self.beta[j - self.j1]

    def replace(self, alpha=None, beta=None) -> "WaveletCoeffs":
        return WaveletCoeffs(
            self.j1,
            self.j2,
            self.alpha if alpha is None else alpha,
            self.beta if beta is None else tuple(beta),
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, *self.beta])

    @classmethod
    def from_vector(cls, vec, j1: int, j2: int) -> "WaveletCoeffs":
        vec = np.asarray(vec)
        expected = 2**j1 + sum(2**j for j in range(j1, j2 + 1))
        if vec.size != expected:
            raise ValueError(f"expected {expected} coefficients, got {vec.size}")
        alpha = vec[: 2**j1]
        beta, pos = [], 2**j1
        for j in range(j1, j2 + 1):
            beta.append(vec[pos : pos + 2**j])
            pos += 2**j
        return cls(j1, j2, alpha, tuple(beta))

    def __sub__(self, other):
        return WaveletCoeffs.from_vector(self.to_vector() - other.to_vector(), self.j1, self.j2)

    def __add__(self, other):
        return WaveletCoeffs.from_vector(self.to_vector() + other.to_vector(), self.j1, self.j2)


def _fold(values, ell, period):
    r = np.mod(ell, period)
    re = np.bincount(r, weights=values.real, minlength=period)
    im = np.bincount(r, weights=values.imag, minlength=period)
    return re + 1j * im


def _analyze_level(series_coef, nmax, j, freqs, window):
    # sum_l a_l conj(FT(atom_{j,k}))(l) for all k at once
    scale = 2**j
    a = series_coef[freqs + nmax] * np.conj(window)
    folded = _fold(a, freqs, scale)
    return scale**-0.5 * scale * np.fft.ifft(folded)


def analyze(f_hat: FourierSeries, j1: int, j2: int, d: int = 0, auxiliary_degree: int = 3) -> WaveletCoeffs:
    """Wavelet coefficients of ``f^{(d)}`` on levels ``j1..j2`` via Parseval."""
    if j1 < 0 or j2 < j1:
        raise ValueError(f"need 0 <= j1 <= j2, got j1={j1}, j2={j2}")
    if d < 0:
        raise ValueError("derivative order must be >= 0")
    f_hat.require(band_limit(j1, j2, auxiliary_degree))
    g = f_hat.derivative(d).coef
    win = MeyerWindow(auxiliary_degree)

    d1 = support_sets(j1, auxiliary_degree).approx_freqs
    alpha = _analyze_level(g, f_hat.nmax, j1, d1, win.phi_hat(TWO_PI * d1 / 2**j1))
    beta = []
    for j in range(j1, j2 + 1):
        cj = support_sets(j, auxiliary_degree).detail_freqs
        beta.append(_analyze_level(g, f_hat.nmax, j, cj, win.psi_hat(TWO_PI * cj / 2**j)))
    return WaveletCoeffs(j1, j2, alpha, tuple(beta))


def synthesize_fourier(coeffs: WaveletCoeffs, auxiliary_degree: int = 3) -> FourierSeries:
    """Fourier coefficients of ``sum alpha phi + sum beta psi``."""
    nmax = band_limit(coeffs.j1, max(coeffs.j1, coeffs.j2), auxiliary_degree)
    out = np.zeros(2 * nmax + 1, dtype=complex)
    win = MeyerWindow(auxiliary_degree)

    def add(c, j, freqs, window):
        scale = 2**j
        spectrum = np.fft.fft(c)
        out[freqs + nmax] += scale**-0.5 * window * spectrum[np.mod(freqs, scale)]

    d1 = support_sets(coeffs.j1, auxiliary_degree).approx_freqs
    add(coeffs.alpha, coeffs.j1, d1, win.phi_hat(TWO_PI * d1 / 2**coeffs.j1))
    for j, b in zip(coeffs.levels, coeffs.beta):
        cj = support_sets(j, auxiliary_degree).detail_freqs
        add(b, j, cj, win.psi_hat(TWO_PI * cj / 2**j))
    return FourierSeries(out)


def synthesize(coeffs: WaveletCoeffs, grid_size: int, auxiliary_degree: int = 3,
               return_complex: bool = False, imag_tol: float = 1e-10) -> np.ndarray:
    """Evaluate the wavelet expansion on ``t_i = i / grid_size``.

    The real part is returned; an imaginary residue above ``imag_tol``
    (relative to the peak) means the coefficients do not describe a real
    function and raises ``ValueError``.
    """
    series = synthesize_fourier(coeffs, auxiliary_degree)
    if 2 * series.nmax >= grid_size:
        raise CoverageError(
            f"grid of {grid_size} samples aliases level {coeffs.j2} "
            f"(needs at least {2 * series.nmax + 1})"
        )
    x = series.to_grid(grid_size, real=False)
    if return_complex:
        return x
    scale = max(np.abs(x).max(), 1.0)
    if np.abs(x.imag).max() > imag_tol * scale:
        raise ValueError("coefficients synthesize a complex signal; pass return_complex=True")
    return x.real

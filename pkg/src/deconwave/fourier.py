"""Fourier-series representation of 1-periodic functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CoverageError(ValueError):
    """Raised when a Fourier series does not cover a required frequency range."""


@dataclass(frozen=True)
class FourierSeries:
    """Complex Fourier coefficients of a 1-periodic function.

    Coefficients are stored for the contiguous band ``-nmax, ..., nmax``;
    frequencies outside the band are treated as unknown, not zero.

    Parameters
    ----------
    coef : ndarray of complex, shape (2 * nmax + 1,)
        ``coef[nmax + l]`` is the coefficient at integer frequency ``l``.
    """

    coef: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=complex)
        if coef.ndim != 1 or coef.size % 2 == 0:
            raise ValueError("coef must be a 1-D array of odd length 2*nmax+1")
        coef.setflags(write=False)
        object.__setattr__(self, "coef", coef)

    @property
    def nmax(self) -> int:
        return (self.coef.size - 1) // 2

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    @classmethod
    def zeros(cls, nmax: int) -> "FourierSeries":
        return cls(np.zeros(2 * nmax + 1, dtype=complex))

    @classmethod
    def from_mapping(cls, values: dict, nmax: int | None = None) -> "FourierSeries":
        """Build from ``{l: value}``; missing frequencies inside the band are 0."""
        if nmax is None:
            nmax = max((abs(int(l)) for l in values), default=0)
        coef = np.zeros(2 * nmax + 1, dtype=complex)
        for l, v in values.items():
            if abs(l) > nmax:
                raise CoverageError(f"frequency {l} outside band |l| <= {nmax}")
            coef[nmax + int(l)] = v
        return cls(coef)

    @classmethod
    def from_samples(cls, samples, nmax: int | None = None) -> "FourierSeries":
        """Discrete Fourier coefficients of samples taken at ``t_i = i / T``.

        Exact for trigonometric polynomials of degree ``< T / 2``.
        """
        x = np.asarray(samples)
        T = x.shape[0]
        if nmax is None:
            nmax = (T - 1) // 2
        if 2 * nmax >= T:
            raise CoverageError(f"nmax={nmax} aliases on a grid of T={T} samples")
        spec = np.fft.fft(x) / T
        idx = np.arange(-nmax, nmax + 1) % T
        return cls(spec[idx])

    @classmethod
    def from_function(cls, func, nmax: int, grid_size: int | None = None) -> "FourierSeries":
        """Coefficients of ``func`` by the rectangle rule on a uniform grid.

        The rule is spectrally accurate for smooth periodic functions; the
        default grid oversamples the band by a factor of 8.
        """
        if grid_size is None:
            grid_size = max(1024, 1 << int(np.ceil(np.log2(16 * nmax + 2))))
        t = np.arange(grid_size) / grid_size
        return cls.from_samples(func(t), nmax)

    def at(self, ell) -> np.ndarray:
        """Coefficient(s) at integer frequencies ``ell``."""
        ell = np.asarray(ell, dtype=int)
        if ell.size and np.abs(ell).max() > self.nmax:
            bad = ell[np.abs(ell) > self.nmax]
            raise CoverageError(
                f"frequencies {bad.min()}..{bad.max()} outside band |l| <= {self.nmax}"
            )
        return self.coef[ell + self.nmax]

    def require(self, nmax: int) -> None:
        if nmax > self.nmax:
            raise CoverageError(
                f"need frequencies |l| <= {nmax}, series covers |l| <= {self.nmax} "
                f"(missing {self.nmax + 1}..{nmax} in absolute value)"
            )

    def truncate(self, nmax: int) -> "FourierSeries":
        self.require(nmax)
        c = self.nmax
        return FourierSeries(self.coef[c - nmax : c + nmax + 1])

    def pad(self, nmax: int) -> "FourierSeries":
        """Extend with zero coefficients up to ``nmax``."""
        if nmax <= self.nmax:
            return self
        out = np.zeros(2 * nmax + 1, dtype=complex)
        out[nmax - self.nmax : nmax + self.nmax + 1] = self.coef
        return FourierSeries(out)

    def derivative(self, order: int = 1) -> "FourierSeries":
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        if order == 0:
            return self
        return FourierSeries(self.coef * (2j * np.pi * self.freqs) ** order)

    def is_hermitian(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coef - np.conj(self.coef[::-1])) <= atol))

    def to_grid(self, grid_size: int, real: bool = True) -> np.ndarray:
        """Evaluate on ``t_i = i / grid_size`` with an inverse FFT."""
        if 2 * self.nmax >= grid_size:
            raise CoverageError(
                f"band |l| <= {self.nmax} aliases on a grid of {grid_size} samples"
            )
        spec = np.zeros(grid_size, dtype=complex)
        spec[self.freqs % grid_size] = self.coef
        x = np.fft.ifft(spec) * grid_size
        return x.real if real else x

    def evaluate(self, t) -> np.ndarray:
        """Evaluate at arbitrary points by direct summation."""
        t = np.asarray(t, dtype=float)
        phase = np.exp(2j * np.pi * np.multiply.outer(t, self.freqs))
        return phase @ self.coef

    def energy(self) -> float:
        return float(np.sum(np.abs(self.coef) ** 2))

    def _binary(self, other, op):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        n = max(self.nmax, other.nmax)
        return FourierSeries(op(self.pad(n).coef, other.pad(n).coef))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        if isinstance(scalar, FourierSeries):
            return NotImplemented
        return FourierSeries(self.coef * scalar)

    __rmul__ = __mul__

    def __len__(self):
        return self.coef.size

"""Multichannel convolution model in the Fourier domain.

Channel ``v`` observes ``y_{l,v} = FT(f)(l) FT(g_v)(l) + eps e_{l,v}`` for
every integer frequency ``l`` in the working band.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fourier import CoverageError, FourierSeries

logger = logging.getLogger(__name__)

__all__ = [
    "BlurKernel",
    "ChannelSet",
    "ObservationSet",
    "SmoothnessReport",
    "bsnr_to_epsilon",
    "laplacian_kernel",
    "ordinary_smoothness_check",
    "random_sigmas",
    "rho",
    "simulate",
]


@dataclass(frozen=True)
class BlurKernel:
    """A known blurring function through its Fourier coefficients on a band.

    Parameters
    ----------
    sigma, delta : float
        Ordinary-smoothness scale and decay exponent of ``|FT(g)(l)|``.
    transfer : FourierSeries
        ``FT(g)(l)`` for ``|l| <= transfer.nmax``.
    tau : float or None
        Laplacian width, when the kernel came from :func:`laplacian_kernel`.
    """

    sigma: float
    delta: float
    transfer: FourierSeries
    tau: float | None = None

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if not self.delta > 1:
            raise ValueError("delta must be > 1")

    @property
    def nmax(self) -> int:
        return self.transfer.nmax

    def __call__(self, ell) -> np.ndarray:
        return self.transfer.at(ell)


def laplacian_kernel(tau: float, band: int) -> BlurKernel:
    """Periodized two-sided exponential ``(1/tau) sum_m exp(-|t + m| / tau)``.

    ``FT(g)(l) = 2 / (1 + 4 pi^2 l^2 tau^2)``, i.e. ordinary smooth with
    ``delta = 2`` and ``sigma = 2 pi tau``.
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    ell = np.arange(-band, band + 1)
    values = 2.0 / (1.0 + 4.0 * np.pi**2 * ell**2 * tau**2)
    return BlurKernel(sigma=2 * np.pi * tau, delta=2.0, transfer=FourierSeries(values), tau=tau)


def kernel_from_sigma(sigma: float, band: int) -> BlurKernel:
    """Laplacian kernel parameterized by ``sigma = 2 pi tau``."""
    return laplacian_kernel(sigma / (2 * np.pi), band)


@dataclass(frozen=True)
class SmoothnessReport:
    passed: bool
    first_violation: int | None = None
    bound: str | None = None

    def __bool__(self):
        return self.passed


def ordinary_smoothness_check(kernel: BlurKernel, c_g: float, C_g: float, band=None,
                              rtol: float = 1e-12) -> SmoothnessReport:
    """Check ``c_g w(l) <= |FT(g)(l)| <= C_g w(l)``, ``w = (1 + sigma^2 l^2)^(-delta/2)``.

    ``band`` is an iterable of frequencies (default: the kernel's whole band).
    Frequencies are scanned in the order given and the first violation is
    reported.  ``rtol`` absorbs rounding when a bound is attained exactly.
    """
    if not (0 < c_g <= C_g):
        raise ValueError("need 0 < c_g <= C_g")
    ell = kernel.transfer.freqs if band is None else np.asarray(list(band), dtype=int)
    if ell.size == 0:
        raise ValueError("empty band")
    mod = np.abs(kernel(ell))
    w = (1.0 + kernel.sigma**2 * ell.astype(float) ** 2) ** (-kernel.delta / 2)
    low = mod < c_g * w * (1 - rtol)
    high = mod > C_g * w * (1 + rtol)
    bad = low | high
    if not bad.any():
        return SmoothnessReport(True)
    i = int(np.argmax(bad))
    return SmoothnessReport(False, int(ell[i]), "lower" if low[i] else "upper")


def rho(kernels) -> float:
    """Channel aggregation weight ``sum_v (1 + sigma_v^2)^(-delta)``."""
    kernels = list(kernels)
    if not kernels:
        raise ValueError("need at least one channel")
    deltas = {k.delta for k in kernels}
    if len(deltas) != 1:
        raise ValueError(f"channels must share delta, got {sorted(deltas)}")
    return float(sum((1.0 + k.sigma**2) ** (-k.delta) for k in kernels))


@dataclass(frozen=True)
class ChannelSet:
    """The ``n`` known kernels of the multichannel model."""

    kernels: tuple

    def __post_init__(self):
        kernels = tuple(self.kernels)
        if not kernels:
            raise ValueError("ChannelSet needs at least one kernel")
        object.__setattr__(self, "kernels", kernels)
        rho(kernels)

    @classmethod
    def laplacian(cls, sigmas, band: int) -> "ChannelSet":
        return cls(tuple(kernel_from_sigma(s, band) for s in sigmas))

    @property
    def n(self) -> int:
        return len(self.kernels)

    @property
    def delta(self) -> float:
        return self.kernels[0].delta

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([k.sigma for k in self.kernels])

    @property
    def rho_n(self) -> float:
        return rho(self.kernels)

    @property
    def weights(self) -> np.ndarray:
        """Per-channel weights ``(1 + sigma_v^2)^(-delta)``."""
        return (1.0 + self.sigmas**2) ** (-self.delta)

    @property
    def nmax(self) -> int:
        return min(k.nmax for k in self.kernels)

    def transfer_matrix(self, ell) -> np.ndarray:
        """``FT(g_v)(l)`` with shape ``(len(ell), n)``."""
        return np.stack([k(ell) for k in self.kernels], axis=1)

    def __len__(self):
        return self.n

    def __add__(self, other: "ChannelSet") -> "ChannelSet":
        return ChannelSet(self.kernels + other.kernels)


@dataclass(frozen=True)
class ObservationSet:
    """Fourier-domain observations ``y[l + nmax, v]`` for ``|l| <= nmax``."""

    y: np.ndarray
    epsilon: float
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex)
        if y.ndim != 2 or y.shape[0] % 2 == 0:
            raise ValueError("y must have shape (2*nmax+1, n_channels)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def nmax(self) -> int:
        return (self.y.shape[0] - 1) // 2

    @property
    def n_channels(self) -> int:
        return self.y.shape[1]

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    def channel(self, v: int) -> FourierSeries:
        return FourierSeries(self.y[:, v])

    def rows(self, ell) -> np.ndarray:
        ell = np.asarray(ell, dtype=int)
        if ell.size and np.abs(ell).max() > self.nmax:
            raise CoverageError(f"observations cover |l| <= {self.nmax}, need {np.abs(ell).max()}")
        return self.y[ell + self.nmax]

    def is_hermitian(self) -> bool:
        return bool(np.array_equal(self.y, np.conj(self.y[::-1])))


def hermitian_noise(rng: np.random.Generator, nmax: int, n: int) -> np.ndarray:
    """Unit-variance complex Gaussian noise with ``e[-l] = conj(e[l])``.

    ``e_0`` is real N(0, 1); for ``l > 0`` real and imaginary parts are
    independent N(0, 1/2), so ``E|e_l|^2 = 1`` at every frequency.
    """
    e = np.empty((2 * nmax + 1, n), dtype=complex)
    e[nmax] = rng.standard_normal(n)
    if nmax:
        pos = (rng.standard_normal((nmax, n)) + 1j * rng.standard_normal((nmax, n))) / np.sqrt(2)
        e[nmax + 1 :] = pos
        e[:nmax] = np.conj(pos[::-1])
    return e


def simulate(f_hat: FourierSeries, channels: ChannelSet, epsilon: float, seed=None,
             nmax: int | None = None) -> ObservationSet:
    """Draw multichannel observations on the band ``|l| <= nmax``.

    ``seed`` may be an int, a sequence of ints or a ``numpy.random.Generator``.
    With ``epsilon == 0`` no random numbers are drawn.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if nmax is None:
        nmax = min(f_hat.nmax, channels.nmax)
    f_hat.require(nmax)
    ell = np.arange(-nmax, nmax + 1)
    fl = f_hat.at(ell)
    if not np.allclose(fl, np.conj(fl[::-1]), rtol=0, atol=1e-10 * max(np.abs(fl).max(), 1.0)):
        raise ValueError("f_hat is not Hermitian; the model needs a real-valued f")
    y = fl[:, None] * channels.transfer_matrix(ell)
    if epsilon > 0:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        y = y + epsilon * hermitian_noise(rng, nmax, channels.n)
    # a no-op for exactly Hermitian input; removes rounding asymmetry otherwise
    y = 0.5 * (y + np.conj(y[::-1]))
    int_seed = seed if isinstance(seed, (int, np.integer)) else None
    return ObservationSet(y, float(epsilon), int_seed)


def blurred_signal(f_hat: FourierSeries, kernel: BlurKernel, grid_size: int) -> np.ndarray:
    """Noise-free ``(f * g)(t_i)`` on ``t_i = i / grid_size``."""
    nmax = min(f_hat.nmax, kernel.nmax, (grid_size - 1) // 2)
    ell = np.arange(-nmax, nmax + 1)
    return FourierSeries(f_hat.at(ell) * kernel(ell)).to_grid(grid_size)


def bsnr_to_epsilon(blurred, bsnr_db: float) -> float:
    """Noise level giving ``10 log10(sum(blurred^2) / (T eps^2)) = bsnr_db``."""
    x = np.asarray(blurred, dtype=float)
    energy = float(np.sum(x**2))
    if x.size == 0 or energy == 0:
        raise ValueError("blurred signal has zero energy")
    return float(np.sqrt(energy / (x.size * 10.0 ** (bsnr_db / 10.0))))


def random_sigmas(n: int, rng: np.random.Generator, sigma_max: float = 10.0) -> np.ndarray:
    """Draw ``sigma_v`` i.i.d. uniform on ``(0, sigma_max]``."""
    if not sigma_max > 0:
        raise ValueError("sigma_max must be > 0")
    # 1 - U(0,1) lies in (0, 1]
    s = sigma_max * (1.0 - rng.random(n))
    logger.debug("drew sigmas %s", s)
    return s

"""Empirical wavelet coefficients and the four shrinkage rules.

The coefficient estimators deconvolve each channel in the Fourier domain,
average channels with weights ``(1 + sigma_v^2)^(-delta) / rho_n`` and then
take Parseval inner products with the Meyer atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from . import meyer
from .fourier import FourierSeries
from .meyer import TWO_PI, WaveletCoeffs
from .model import ChannelSet, ObservationSet

__all__ = [
    "LAMBDA_STAR",
    "METHODS",
    "BlockLayout",
    "EstimatorConfig",
    "InvertibilityError",
    "LevelPlan",
    "block_layout",
    "blockhard_shrink",
    "blockjs_shrink",
    "block_noise_scale",
    "block_thresholds",
    "noise_autocovariance",
    "nominal_block_thresholds",
    "coefficient_variance",
    "deconvolved_series",
    "empirical_alpha",
    "empirical_beta",
    "empirical_coefficients",
    "estimate",
    "level_plan",
    "max_level",
    "term_shrink",
    "term_thresholds",
]

# root of lambda - log(lambda) = 3 on (1, inf)
LAMBDA_STAR = 4.505241495792885

METHODS = ("BlockJS", "BlockH", "TermJS", "TermH")


class InvertibilityError(ValueError):
    """A kernel has a zero Fourier coefficient where it must be inverted."""


def normalize_method(method: str) -> str:
    for m in METHODS:
        if method.lower() == m.lower():
            return m
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def max_level(grid_T: int) -> int:
    """Finest level whose detail band fits below Nyquist: ``2^{j+2}/3 <= T/2``."""
    j = 0
    while 2 ** (j + 3) <= 1.5 * grid_T:
        j += 1
    return j


@dataclass(frozen=True)
class LevelPlan:
    """Resolution range and block size.

    ``raw`` holds the untouched formula values ``(j1, j2, L)`` when
    ``rho_n >= e`` (else ``None``); ``clamped`` names every adjustment made.
    """

    j1: int
    j2: int
    L: int
    rho_n: float
    clamped: tuple = ()
    raw: tuple | None = None

    @property
    def is_clamped(self) -> bool:
        return bool(self.clamped)

    @property
    def levels(self) -> range:
        return range(self.j1, self.j2 + 1)


def level_plan(rho_n: float, delta: float, d: int, grid_T: int,
               j1: int | None = None, j2: int | None = None, L: int | None = None) -> LevelPlan:
    """Coarsest level, finest level and block size for a given ``rho_n``.

    Formulas (natural logarithms)::

        j1 = floor(log2(log rho_n))
        j2 = floor(log2(rho_n / log rho_n) / (2 delta + 2 d + 1))
        L  = floor(log rho_n)

    They need ``rho_n >= e``.  Below that the plan falls back to
    ``j1 = 0, L = 1`` and the Nyquist-limited ``j2``.  Explicit ``j1``,
    ``j2``, ``L`` override the formulas and are then subject to the same
    clamps: ``0 <= j1 <= j2 <= max_level(grid_T)`` and ``1 <= L <= 2^j1``.
    """
    if not rho_n > 0:
        raise ValueError("rho_n must be > 0")
    if not delta > 1:
        raise ValueError("delta must be > 1")
    if d < 0:
        raise ValueError("d must be >= 0")
    if grid_T < 16:
        raise ValueError("grid_T must be >= 16")

    flags = []
    jmax = max_level(grid_T)
    raw = None
    if rho_n >= math.e:
        lr = math.log(rho_n)
        pj1 = math.floor(math.log2(lr))
        pj2 = math.floor(math.log2(rho_n / lr) / (2 * delta + 2 * d + 1))
        pL = math.floor(lr)
        raw = (pj1, pj2, pL)
    else:
        flags.append("rho_below_e")
        pj1, pj2, pL = 0, jmax, 1

    for name, value in (("j1", j1), ("j2", j2), ("L", L)):
        if value is not None:
            flags.append(f"{name}_override")
    pj1 = pj1 if j1 is None else int(j1)
    pj2 = pj2 if j2 is None else int(j2)
    pL = pL if L is None else int(L)

    if pj1 < 0:
        pj1 = 0
        flags.append("j1_min")
    if pj1 > jmax:
        pj1 = jmax
        flags.append("j1_nyquist")
    if pj2 > jmax:
        pj2 = jmax
        flags.append("j2_nyquist")
    if pj2 < pj1:
        pj2 = pj1
        flags.append("j2_below_j1")
    if pL < 1:
        pL = 1
        flags.append("L_min")
    if pL > 2**pj1:
        pL = 2**pj1
        flags.append("L_max")
    return LevelPlan(pj1, pj2, pL, float(rho_n), tuple(flags), raw)


@dataclass(frozen=True)
class BlockLayout:
    """Partition of ``{0, ..., 2^j - 1}`` into consecutive blocks."""

    level: int
    blocks: tuple

    @property
    def block_ids(self) -> np.ndarray:
        ids = np.empty(2**self.level, dtype=int)
        for i, b in enumerate(self.blocks):
            ids[b] = i
        return ids

    def __len__(self):
        return len(self.blocks)


def block_layout(j: int, L: int) -> BlockLayout:
    """Blocks of ``L`` consecutive indices; a remainder joins the last block."""
    size = 2**j
    if not 1 <= L <= size:
        raise ValueError(f"block size L={L} must lie in [1, 2^j={size}]")
    count = size // L
    starts = [K * L for K in range(count)]
    ends = starts[1:] + [size]
    blocks = tuple(np.arange(a, b) for a, b in zip(starts, ends))
    for b in blocks:
        b.setflags(write=False)
    return BlockLayout(j, blocks)


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator settings.

    ``lam`` is the block threshold constant.  ``term_lam`` scales the
    term-by-term threshold (default ``2 log`` of the number of detail
    coefficients) and ``term_threshold`` replaces it by a fixed value.
    """

    d: int = 0
    lam: float = LAMBDA_STAR
    method: str = "BlockJS"
    j1: int | None = None
    j2: int | None = None
    L: int | None = None
    term_lam: float | None = None
    term_threshold: float | None = None
    threshold_mode: str = "spectral"
    auxiliary_degree: int = 3

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be >= 0")
        if not self.lam >= 0:
            raise ValueError("lam must be >= 0")
        if self.d > self.auxiliary_degree:
            raise ValueError(
                f"derivative order {self.d} exceeds the window smoothness "
                f"(auxiliary_degree={self.auxiliary_degree})"
            )
        if self.threshold_mode not in ("spectral", "nominal"):
            raise ValueError("threshold_mode must be 'spectral' or 'nominal'")
        object.__setattr__(self, "method", normalize_method(self.method))


def _inverse_transfer(channels: ChannelSet, ell):
    g = channels.transfer_matrix(ell)
    if np.any(g == 0):
        rows, cols = np.nonzero(g == 0)
        raise InvertibilityError(
            f"FT(g_{cols[0] + 1})({ell[rows[0]]}) = 0; kernel cannot be inverted there"
        )
    return 1.0 / g


def deconvolved_series(obs: ObservationSet, channels: ChannelSet, nmax: int) -> FourierSeries:
    """``(1/rho_n) sum_v w_v y_{l,v} / FT(g_v)(l)`` for ``|l| <= nmax``."""
    if obs.n_channels != channels.n:
        raise ValueError(f"{obs.n_channels} observed channels but {channels.n} kernels")
    ell = np.arange(-nmax, nmax + 1)
    y = obs.rows(ell)
    z = (y * _inverse_transfer(channels, ell)) @ channels.weights / channels.rho_n
    return FourierSeries(z)


def _empirical_single(obs, channels, j, k, d, kind, auxiliary_degree):
    sets = meyer.support_sets(j, auxiliary_degree)
    ell = sets.approx_freqs if kind == "father" else sets.detail_freqs
    atom = meyer.periodized_basis_fourier(j, k, ell, kind, auxiliary_degree)
    weights = channels.weights / channels.rho_n
    ratio = obs.rows(ell) * _inverse_transfer(channels, ell)
    per_l = (2j * np.pi * ell) ** d * np.conj(atom)
    return complex(np.sum(per_l[:, None] * ratio * weights[None, :]))


def empirical_alpha(obs: ObservationSet, channels: ChannelSet, j1: int, k: int, d: int = 0,
                    auxiliary_degree: int = 3) -> complex:
    """Empirical approximation coefficient, summed directly over ``D_{j1}``."""
    return _empirical_single(obs, channels, j1, k, d, "father", auxiliary_degree)


def empirical_beta(obs: ObservationSet, channels: ChannelSet, j: int, k: int, d: int = 0,
                   auxiliary_degree: int = 3) -> complex:
    """Empirical detail coefficient, summed directly over ``C_j``."""
    return _empirical_single(obs, channels, j, k, d, "mother", auxiliary_degree)


def empirical_coefficients(obs: ObservationSet, channels: ChannelSet, j1: int, j2: int,
                           d: int = 0, auxiliary_degree: int = 3) -> WaveletCoeffs:
    """All empirical coefficients on levels ``j1..j2`` at once."""
    nmax = meyer.band_limit(j1, j2, auxiliary_degree)
    z = deconvolved_series(obs, channels, nmax)
    return meyer.analyze(z, j1, j2, d, auxiliary_degree)


def coefficient_variance(channels: ChannelSet, epsilon: float, j: int, k: int, d: int = 0,
                         kind: str = "mother", auxiliary_degree: int = 3) -> float:
    """Closed-form variance ``E|beta_hat - beta|^2`` of an empirical coefficient."""
    sets = meyer.support_sets(j, auxiliary_degree)
    ell = sets.approx_freqs if kind == "father" else sets.detail_freqs
    atom2 = np.abs(meyer.periodized_basis_fourier(j, k, ell, kind, auxiliary_degree)) ** 2
    g2 = np.abs(channels.transfer_matrix(ell)) ** 2
    w2 = channels.weights**2
    inner = ((TWO_PI * ell) ** (2 * d) * atom2)[:, None] / g2
    return float(epsilon**2 / channels.rho_n**2 * np.sum(inner * w2[None, :]))


def nominal_block_thresholds(plan: LevelPlan, epsilon: float, delta: float, d: int,
                             lam: float) -> list:
    """``lam eps^2 rho_n^{-1} 2^{2j(delta + d)}`` for each level of the plan."""
    return [lam * epsilon**2 / plan.rho_n * 2.0 ** (2 * j * (delta + d)) for j in plan.levels]


def noise_autocovariance(channels: ChannelSet, epsilon: float, j: int, d: int, lags: int,
                         auxiliary_degree: int = 3) -> np.ndarray:
    """``Cov(beta_hat_{j,k}, beta_hat_{j,k+m})`` for ``m = 0..lags-1``.

    The noise of the empirical details is stationary in ``k``; lag 0 is the
    variance given by :func:`coefficient_variance`.
    """
    ell = meyer.support_sets(j, auxiliary_degree).detail_freqs
    atom2 = np.abs(meyer.periodized_basis_fourier(j, 0, ell, "mother", auxiliary_degree)) ** 2
    g2 = np.abs(channels.transfer_matrix(ell)) ** 2
    spectrum = epsilon**2 / channels.rho_n**2 * (TWO_PI * ell) ** (2 * d) * atom2 \
        * ((channels.weights**2)[None, :] / g2).sum(axis=1)
    m = np.arange(lags)
    return np.cos(TWO_PI * np.multiply.outer(m, ell) / 2**j) @ spectrum


def block_noise_scale(channels: ChannelSet, epsilon: float, j: int, d: int, size: int,
                      auxiliary_degree: int = 3) -> float:
    """Largest eigenvalue of the noise covariance of ``size`` consecutive details."""
    acov = noise_autocovariance(channels, epsilon, j, d, size, auxiliary_degree)
    return float(np.linalg.eigvalsh(toeplitz(acov))[-1])


def block_thresholds(plan: LevelPlan, epsilon: float, delta: float, d: int, lam: float,
                     channels: ChannelSet | None = None, layouts=None, mode: str = "spectral",
                     auxiliary_degree: int = 3) -> list:
    """Per-level ``threshold_base`` for the block rules.

    ``mode="nominal"`` returns ``lam eps^2 rho_n^{-1} 2^{2j(delta+d)}``.
    ``mode="spectral"`` returns ``lam * mu_j`` where ``mu_j`` is the largest
    eigenvalue of the within-block noise covariance, so a pure-noise block
    survives with probability at most ``P(chi2_L > lam L)``.
    """
    if mode == "nominal":
        return nominal_block_thresholds(plan, epsilon, delta, d, lam)
    if mode != "spectral":
        raise ValueError(f"mode must be 'spectral' or 'nominal', got {mode!r}")
    if channels is None:
        raise ValueError("spectral thresholds need the channel set")
    out = []
    for i, j in enumerate(plan.levels):
        size = plan.L if layouts is None else max(len(b) for b in layouts[i].blocks)
        out.append(lam * block_noise_scale(channels, epsilon, j, d, size, auxiliary_degree))
    return out


def term_thresholds(plan: LevelPlan, epsilon: float, delta: float, d: int,
                    term_lam: float | None = None, channels: ChannelSet | None = None,
                    mode: str = "spectral", auxiliary_degree: int = 3) -> list:
    """Per-level cut ``t_j`` for the term-by-term rules.

    ``term_lam`` defaults to ``2 log`` of the number of detail coefficients.
    ``mode="spectral"`` gives ``sqrt(term_lam * Var(beta_hat_{j,k}))``;
    ``mode="nominal"`` gives ``sqrt(term_lam) eps 2^{j(delta+d)}
    sqrt(log rho_n / rho_n)`` with ``log rho_n`` floored at 1 so the scale
    stays defined for ``rho_n < e``.
    """
    if term_lam is None:
        count = sum(2**j for j in plan.levels)
        term_lam = 2.0 * math.log(max(count, 2))
    if mode == "spectral":
        if channels is None:
            raise ValueError("spectral thresholds need the channel set")
        return [math.sqrt(term_lam * coefficient_variance(channels, epsilon, j, 0, d,
                                                          auxiliary_degree=auxiliary_degree))
                for j in plan.levels]
    if mode != "nominal":
        raise ValueError(f"mode must be 'spectral' or 'nominal', got {mode!r}")
    scale = math.sqrt(max(math.log(plan.rho_n), 1.0) / plan.rho_n)
    return [math.sqrt(term_lam) * epsilon * 2.0 ** (j * (delta + d)) * scale for j in plan.levels]


def _block_factors(beta, layout, base, james_stein):
    # work in units of the block peak so tiny coefficients do not underflow
    out = np.zeros_like(beta)
    for b in layout.blocks:
        peak = np.abs(beta[b]).max()
        if peak == 0:
            continue
        scaled = np.mean((np.abs(beta[b]) / peak) ** 2) * peak  # E / peak
        with np.errstate(over="ignore"):  # inf ratio means the block is killed
            ratio = np.float64(base) / peak
        if ratio < scaled:
            out[b] = beta[b] * (1.0 - ratio / scaled) if james_stein else beta[b]
    return out


def _check_levels(beta_hat, layouts, thresholds):
    if not (len(beta_hat) == len(layouts) == len(thresholds)):
        raise ValueError("need one layout and one threshold per level")


def blockjs_shrink(beta_hat, layouts, threshold_base) -> list:
    """Block James-Stein rule.

    A block with mean energy ``E <= base`` is set to zero; otherwise every
    coefficient in it is multiplied by ``1 - base / E``.
    """
    _check_levels(beta_hat, layouts, threshold_base)
    return [_block_factors(np.asarray(beta, dtype=complex), layout, base, True)
            for beta, layout, base in zip(beta_hat, layouts, threshold_base)]


def blockhard_shrink(beta_hat, layouts, threshold_base) -> list:
    """Keep a block unchanged iff its mean energy exceeds the base, else zero it."""
    _check_levels(beta_hat, layouts, threshold_base)
    return [_block_factors(np.asarray(beta, dtype=complex), layout, base, False)
            for beta, layout, base in zip(beta_hat, layouts, threshold_base)]


def term_shrink(beta_hat, thresholds, rule: str = "hard") -> list:
    """Term-by-term hard thresholding or non-negative garrote."""
    if len(beta_hat) != len(thresholds):
        raise ValueError("need one threshold per level")
    out = []
    for beta, t in zip(beta_hat, thresholds):
        beta = np.asarray(beta, dtype=complex)
        mag = np.abs(beta)
        keep = mag > t
        if rule == "hard":
            out.append(np.where(keep, beta, 0))
        elif rule == "garrote":
            ratio = t / np.where(keep, mag, 1.0)
            factor = np.where(keep, 1.0 - ratio**2, 0.0)
            out.append(beta * factor)
        else:
            raise ValueError(f"rule must be 'hard' or 'garrote', got {rule!r}")
    return out


def estimate(obs: ObservationSet, channels: ChannelSet, config: EstimatorConfig, grid_T: int):
    """Estimate ``f^{(d)}`` on ``t_i = i / grid_T``.

    Returns ``(signal, shrunk_coefficients)``.
    """
    from .deconvolver import WaveletDeconvolver

    est = WaveletDeconvolver.from_config(config, channels=channels, grid_size=grid_T).fit(obs)
    return est.predict(), est.coeffs_

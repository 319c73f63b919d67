"""Scikit-learn style estimator for multichannel wavelet deconvolution."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import meyer
from .estimators import (
    LAMBDA_STAR,
    EstimatorConfig,
    block_layout,
    block_thresholds,
    blockhard_shrink,
    blockjs_shrink,
    empirical_coefficients,
    level_plan,
    normalize_method,
    term_shrink,
    term_thresholds,
)
from .validation import (
    check_channels,
    check_grid_size,
    check_level,
    check_observations,
    check_positive,
)


class WaveletDeconvolver(BaseEstimator):
    """Adaptive wavelet estimator of ``f^{(d)}`` from blurred multichannel data.

    Parameters
    ----------
    channels : ChannelSet
        Known blurring kernels, one per observed channel.
    method : {"BlockJS", "BlockH", "TermJS", "TermH"}
        Shrinkage rule applied to the detail coefficients.
    d : int
        Derivative order to estimate.
    lam : float
        Block threshold constant.
    term_lam, term_threshold : float, optional
        Scale of the term-by-term threshold, or a fixed threshold used at
        every level (``inf`` keeps only the approximation part).
    threshold_mode : {"spectral", "nominal"}
        ``"spectral"`` scales thresholds by the exact coefficient noise
        (block covariance norm, or variance for the term rules);
        ``"nominal"`` uses the bare ``eps^2 rho_n^{-1} 2^{2j(delta+d)}`` rate.
    j1, j2, L : int, optional
        Overrides for the coarsest level, finest level and block size.
    grid_size : int
        Number of equispaced samples returned by :meth:`predict`.
    auxiliary_degree : int
        Degree of the Meyer window ramp.

    Attributes
    ----------
    plan_ : LevelPlan
    raw_coeffs_ : WaveletCoeffs
        Empirical coefficients before shrinkage.
    coeffs_ : WaveletCoeffs
        Shrunk coefficients used for reconstruction.
    thresholds_ : list of float
        Per-level threshold actually applied (block energy base or term cut).
    layouts_ : list of BlockLayout
    series_ : FourierSeries
        Fourier coefficients of the estimate.
    """

    def __init__(self, channels=None, method="BlockJS", d=0, lam=LAMBDA_STAR, term_lam=None,
                 term_threshold=None, threshold_mode="spectral", j1=None, j2=None, L=None,
                 grid_size=4096, auxiliary_degree=3):
        self.channels = channels
        self.method = method
        self.d = d
        self.lam = lam
        self.term_lam = term_lam
        self.term_threshold = term_threshold
        self.threshold_mode = threshold_mode
        self.j1 = j1
        self.j2 = j2
        self.L = L
        self.grid_size = grid_size
        self.auxiliary_degree = auxiliary_degree

    @classmethod
    def from_config(cls, config: EstimatorConfig, channels, grid_size=4096):
        return cls(channels=channels, method=config.method, d=config.d, lam=config.lam,
                   term_lam=config.term_lam, term_threshold=config.term_threshold,
                   threshold_mode=config.threshold_mode,
                   j1=config.j1, j2=config.j2, L=config.L, grid_size=grid_size,
                   auxiliary_degree=config.auxiliary_degree)

    def _validate_params(self):
        channels = check_channels(self.channels)
        EstimatorConfig(d=self.d, lam=self.lam, method=self.method,
                        threshold_mode=self.threshold_mode,
                        auxiliary_degree=self.auxiliary_degree)
        check_positive(self.lam, "lam", strict=False)
        for name in ("j1", "j2"):
            check_level(getattr(self, name), name)
        check_level(self.L, "L", minimum=1)
        if self.term_threshold is not None:
            check_positive(self.term_threshold, "term_threshold", strict=False)
        if self.term_lam is not None:
            check_positive(self.term_lam, "term_lam", strict=False)
        return channels, check_grid_size(self.grid_size), normalize_method(self.method)

    def fit(self, X, y=None):
        """Compute and shrink the wavelet coefficients of ``X``.

        ``X`` is an :class:`~deconwave.model.ObservationSet`; ``y`` is ignored.
        """
        channels, T, method = self._validate_params()
        obs = check_observations(X, channels)
        plan = level_plan(channels.rho_n, channels.delta, self.d, T,
                          j1=self.j1, j2=self.j2, L=self.L)
        raw = empirical_coefficients(obs, channels, plan.j1, plan.j2, self.d,
                                     self.auxiliary_degree)
        layouts = [block_layout(j, plan.L) for j in plan.levels]
        if method in ("BlockJS", "BlockH"):
            thresholds = block_thresholds(plan, obs.epsilon, channels.delta, self.d, self.lam,
                                          channels, layouts, self.threshold_mode,
                                          self.auxiliary_degree)
            rule = blockjs_shrink if method == "BlockJS" else blockhard_shrink
            beta = rule(raw.beta, layouts, thresholds)
        else:
            if self.term_threshold is not None:
                thresholds = [float(self.term_threshold)] * len(plan.levels)
            else:
                thresholds = term_thresholds(plan, obs.epsilon, channels.delta, self.d,
                                             self.term_lam, channels, self.threshold_mode,
                                             self.auxiliary_degree)
            beta = term_shrink(raw.beta, thresholds, "garrote" if method == "TermJS" else "hard")

        self.plan_ = plan
        self.layouts_ = layouts
        self.thresholds_ = thresholds
        self.raw_coeffs_ = raw
        self.coeffs_ = raw.replace(beta=beta)
        self.series_ = meyer.synthesize_fourier(self.coeffs_, self.auxiliary_degree)
        return self

    def predict(self, X=None):
        """Estimate on the default grid, or at the time points ``X``."""
        check_is_fitted(self, "coeffs_")
        if X is None:
            return meyer.synthesize(self.coeffs_, self.grid_size, self.auxiliary_degree)
        values = self.series_.evaluate(np.asarray(X, dtype=float))
        scale = max(np.abs(values).max(initial=0.0), 1.0)
        if np.abs(values.imag).max(initial=0.0) > 1e-10 * scale:
            raise ValueError("estimate has a non-negligible imaginary part")
        return values.real

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()

    def kept_mask(self):
        """Per-level boolean arrays: which detail coefficients survived."""
        check_is_fitted(self, "coeffs_")
        return [np.abs(b) > 0 for b in self.coeffs_.beta]

    def score(self, X, y):
        """PSNR (dB) of the grid estimate from ``X`` against true samples ``y``."""
        from .signals import psnr

        return psnr(self.fit(X).predict(), y)

"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numbers

import numpy as np

from .model import ChannelSet, ObservationSet


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    if strict and not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and not value >= 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)


def check_level(value, name, minimum=0):
    if value is None:
        return None
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_grid_size(T, minimum=16):
    T = check_level(T, "grid_size", minimum)
    if T & (T - 1):
        raise ValueError(f"grid_size must be a power of two, got {T}")
    return T


def check_channels(channels):
    if not isinstance(channels, ChannelSet):
        raise TypeError(f"channels must be a ChannelSet, got {type(channels).__name__}")
    return channels


def check_observations(obs, channels=None):
    """Validate an observation set, optionally against its channel set."""
    if not isinstance(obs, ObservationSet):
        raise TypeError(f"expected an ObservationSet, got {type(obs).__name__}")
    if not np.all(np.isfinite(obs.y)):
        raise ValueError("observations contain NaN or inf")
    if channels is not None and obs.n_channels != channels.n:
        raise ValueError(f"observations have {obs.n_channels} channels, kernels {channels.n}")
    return obs

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deconwave.fourier import FourierSeries
from deconwave.model import (
    BlurKernel,
    ChannelSet,
    blurred_signal,
    bsnr_to_epsilon,
    hermitian_noise,
    laplacian_kernel,
    ordinary_smoothness_check,
    random_sigmas,
    rho,
    simulate,
)


def _wave_hat(nmax):
    return FourierSeries.from_mapping({0: 0.5, 2: 0.1, -2: 0.1, 12: 0.05, -12: 0.05}, nmax)


def test_laplacian_closed_form():
    k = laplacian_kernel(0.3, 20)
    assert k(0) == 2
    assert laplacian_kernel(1 / (2 * np.pi), 3)(1) == pytest.approx(1)
    assert k.sigma == pytest.approx(2 * np.pi * 0.3)
    assert k.delta == 2


def test_laplacian_matches_quadrature_of_periodized_kernel():
    tau = 0.07
    t = np.arange(4096) / 4096
    # periodized two-sided exponential, three images are plenty at tau = 0.07
    g = sum(np.exp(-np.abs(t + m) / tau) for m in (-2, -1, 0, 1)) / tau
    fs = FourierSeries.from_samples(g, 8)
    k = laplacian_kernel(tau, 8)
    np.testing.assert_allclose(fs.coef.real, k.transfer.coef.real, rtol=2e-5)


def test_smoothness_check():
    k = laplacian_kernel(0.2, 50)
    assert ordinary_smoothness_check(k, 2, 2)
    rep = ordinary_smoothness_check(k, 0.5, 1)
    assert not rep and rep.first_violation == -50
    rep = ordinary_smoothness_check(k, 0.5, 1, band=[0, 1, 2])
    assert rep.first_violation == 0 and rep.bound == "upper"
    coef = k.transfer.coef.copy()
    coef[50 + 7] = 0
    broken = BlurKernel(k.sigma, 2.0, FourierSeries(coef))
    rep = ordinary_smoothness_check(broken, 2, 2, band=range(0, 20))
    assert rep.first_violation == 7 and rep.bound == "lower"
    with pytest.raises(ValueError, match="empty"):
        ordinary_smoothness_check(k, 1, 2, band=[])
    with pytest.raises(ValueError):
        ordinary_smoothness_check(k, 3, 2)


def test_rho_values():
    assert rho([laplacian_kernel(1 / (2 * np.pi), 2)]) == pytest.approx(0.25)
    zero = BlurKernel(0.0, 2.0, FourierSeries(np.ones(5)))
    assert rho([zero] * 7) == 7
    with pytest.raises(ValueError):
        rho([])
    other = BlurKernel(1.0, 3.0, FourierSeries(np.ones(5)))
    with pytest.raises(ValueError, match="share delta"):
        rho([zero, other])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 20), min_size=1, max_size=6), st.floats(0.01, 5))
def test_rho_monotone_and_additive(sigmas, bump):
    a = ChannelSet.laplacian(sigmas, 2)
    b = ChannelSet.laplacian([s + bump for s in sigmas], 2)
    assert b.rho_n < a.rho_n
    assert (a + b).rho_n == pytest.approx(a.rho_n + b.rho_n, rel=1e-13)


def test_channel_set_recomputes_rho_exactly():
    ch = ChannelSet.laplacian([0.1, 0.4, 2.0], 4)
    assert ch.rho_n == sum((1 + s**2) ** -2.0 for s in ch.sigmas)


def test_noiseless_simulation_is_exact(two_channels):
    f = _wave_hat(60)
    obs = simulate(f, two_channels, 0.0)
    ell = np.arange(-60, 61)
    np.testing.assert_array_equal(obs.y, f.at(ell)[:, None] * two_channels.transfer_matrix(ell))
    assert obs.is_hermitian()


def test_simulation_affine_in_f(two_channels, rng):
    a = FourierSeries(rng.standard_normal(41) * (1 + 0j))
    a = FourierSeries(0.5 * (a.coef + a.coef[::-1]))
    b = _wave_hat(20)
    s = lambda f: simulate(f, two_channels, 0.0).y
    np.testing.assert_allclose(s(a + b), s(a) + s(b), atol=1e-15)


def test_simulation_deterministic(two_channels):
    f = _wave_hat(30)
    a = simulate(f, two_channels, 0.3, seed=11)
    b = simulate(f, two_channels, 0.3, seed=11)
    c = simulate(f, two_channels, 0.3, seed=12)
    np.testing.assert_array_equal(a.y, b.y)
    assert not np.array_equal(a.y, c.y)
    assert a.is_hermitian() and c.is_hermitian()


def test_non_hermitian_target_rejected(two_channels):
    with pytest.raises(ValueError, match="Hermitian"):
        simulate(FourierSeries.from_mapping({3: 1.0}, 5), two_channels, 0.0)


def test_noise_law_monte_carlo():
    rng = np.random.default_rng(5)
    e = np.stack([hermitian_noise(rng, 3, 1)[:, 0] for _ in range(10_000)])
    for l in (1, 2, 3):
        col = e[:, 3 + l]
        assert np.var(col.real) == pytest.approx(0.5, rel=0.05)
        assert np.var(col.imag) == pytest.approx(0.5, rel=0.05)
    assert np.var(e[:, 3].real) == pytest.approx(1.0, rel=0.05)
    np.testing.assert_array_equal(e[:, 3].imag, 0)
    np.testing.assert_array_equal(e[:, 2], np.conj(e[:, 4]))


def test_simulated_mean_within_four_standard_errors():
    ch = ChannelSet.laplacian([0.1, 1.0], 4)
    f = _wave_hat(12)
    R, eps = 10_000, 0.5
    rng = np.random.default_rng(9)
    ys = np.stack([simulate(f, ch, eps, seed=rng, nmax=4).y for _ in range(R)])
    ell = np.arange(-4, 5)
    mean = f.at(ell)[:, None] * ch.transfer_matrix(ell)
    se = eps / np.sqrt(R)
    z = np.abs(ys.mean(axis=0) - mean) / se
    assert z.max() < 4


def test_bsnr_to_epsilon_examples():
    x = np.ones(64)
    assert bsnr_to_epsilon(x, 0) == pytest.approx(1)
    assert bsnr_to_epsilon(x, 20) == pytest.approx(0.1)
    y = np.sin(np.linspace(0, 7, 100))
    assert bsnr_to_epsilon(2 * y, 13) == pytest.approx(2 * bsnr_to_epsilon(y, 13))
    with pytest.raises(ValueError):
        bsnr_to_epsilon(np.zeros(8), 10)


def test_blurred_signal_matches_time_domain_convolution():
    tau, T = 0.05, 512
    f = _wave_hat(255)
    k = laplacian_kernel(tau, 255)
    t = np.arange(T) / T
    fx = f.to_grid(T)
    g = sum(np.exp(-np.abs(t + m) / tau) for m in (-1, 0)) / tau
    circ = np.real(np.fft.ifft(np.fft.fft(fx) * np.fft.fft(g))) / T
    np.testing.assert_allclose(blurred_signal(f, k, T), circ, atol=2e-3)


def test_random_sigmas_range():
    s = random_sigmas(1000, np.random.default_rng(1), 0.5)
    assert s.min() > 0 and s.max() <= 0.5
    with pytest.raises(ValueError):
        random_sigmas(3, np.random.default_rng(1), 0)
